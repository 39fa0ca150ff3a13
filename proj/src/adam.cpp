#include "pose_adapt/adam.hpp"

#include <cmath>

#include "pose_adapt/error.hpp"

namespace pose_adapt {

Adam::Adam(std::span<const std::size_t> tensor_sizes, Options options) : options_(options) {
  for (std::size_t n : tensor_sizes) {
    m_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    v_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  }
}

void Adam::step(std::span<View> params, std::span<const ConstView> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "optimizer tensor count mismatch");
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double t = static_cast<double>(step_);
  const double step_size = options_.learning_rate / (1.0 - std::pow(b1, t));
  const double v_correction = 1.0 / (1.0 - std::pow(b2, t));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (params[i].size() != m_[i].size() || grads[i].size() != m_[i].size()) {
      throw Error(ErrorCode::DimensionMismatch, "optimizer tensor size mismatch");
    }
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseAbs2();
    params[i].array() -=
        step_size * m_[i].array() / ((v_[i].array() * v_correction).sqrt() + options_.epsilon);
  }
}

}  // namespace pose_adapt
