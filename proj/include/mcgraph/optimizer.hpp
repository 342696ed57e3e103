#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mcgraph::ad {

/// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  /// params[k] -= step(grads[k]). The parameter list must keep its order and
  /// shapes across calls.
  void step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd>& grads);

  long steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<Eigen::MatrixXd>& grads, double max_norm);

}  // namespace mcgraph::ad
