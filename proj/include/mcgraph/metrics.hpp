#pragma once

#include <span>
#include <vector>

namespace mcgraph {

/// Mean absolute error. Throws ShapeError on empty or mismatched input.
double mae(std::span<const double> predictions, std::span<const double> actuals);

/// Root mean squared error, same preconditions as mae.
double rmse(std::span<const double> predictions, std::span<const double> actuals);

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> values);

}  // namespace mcgraph
