#include "mcgraph/optimizer.hpp"

#include <cmath>

#include "mcgraph/error.hpp"

namespace mcgraph::ad {

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(const std::vector<Eigen::MatrixXd*>& params,
                const std::vector<Eigen::MatrixXd>& grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& g : grads) {
      m_.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
    }
  }
  if (m_.size() != grads.size()) throw ShapeError("adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseAbs2();
    params[k]->array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

double clip_global_norm(std::vector<Eigen::MatrixXd>& grads, double max_norm) {
  double total = 0.0;
  for (const auto& g : grads) total += g.squaredNorm();
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

}  // namespace mcgraph::ad
