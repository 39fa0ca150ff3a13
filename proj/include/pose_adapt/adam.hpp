#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pose_adapt {

// Adam over a fixed list of parameter tensors, each viewed as a flat vector.
class Adam {
 public:
  using View = Eigen::Map<Eigen::VectorXd>;
  using ConstView = Eigen::Map<const Eigen::VectorXd>;

  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(std::span<const std::size_t> tensor_sizes, Options options);

  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  double learning_rate() const { return options_.learning_rate; }
  std::size_t steps() const { return step_; }

  // params[i] -= lr * mhat / (sqrt(vhat) + eps)
  void step(std::span<View> params, std::span<const ConstView> grads);

 private:
  Options options_;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  std::size_t step_ = 0;
};

}  // namespace pose_adapt
