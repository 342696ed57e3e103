#include "mcgraph/metrics.hpp"

#include <cmath>

#include "mcgraph/error.hpp"

namespace mcgraph {

namespace {

void check(std::span<const double> p, std::span<const double> r, const char* op) {
  if (p.size() != r.size())
    throw ShapeError(std::string(op) + ": " + std::to_string(p.size()) + " predictions vs " +
                     std::to_string(r.size()) + " actuals");
  if (p.empty()) throw ShapeError(std::string(op) + ": empty input");
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> actuals) {
  check(predictions, actuals, "mae");
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) total += std::abs(predictions[k] - actuals[k]);
  return total / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> actuals) {
  check(predictions, actuals, "rmse");
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double e = predictions[k] - actuals[k];
    total += e * e;
  }
  return std::sqrt(total / static_cast<double>(predictions.size()));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace mcgraph
