#include "learn/loss.hpp"

#include "core/error.hpp"
#include "learn/tensors.hpp"

namespace ginet::learn {

torch::Tensor huber_loss(const torch::Tensor& target, const torch::Tensor& prediction) {
  if (!target.sizes().equals(prediction.sizes())) fail(ErrorCode::Shape, "loss operands differ in shape");
  if (target.dim() != 4 || target.size(1) != 4) fail(ErrorCode::Shape, "loss expects (B, 4, H, W) maps");
  const auto d = target - prediction;
  const auto a = d.abs();
  const auto z = torch::where(a < 1.0, 0.5 * d * d, a - 0.5);
  return z.mean({0, 2, 3}).sum();
}

double huber_loss(const GraspMapSet& target, const GraspMapSet& prediction) {
  torch::NoGradGuard no_grad;
  return learn::huber_loss(maps_to_tensor(target).to(torch::kFloat64), maps_to_tensor(prediction).to(torch::kFloat64))
      .item<double>();
}

}  // namespace ginet::learn
