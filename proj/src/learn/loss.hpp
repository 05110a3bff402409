#pragma once

#include <torch/torch.h>

#include "core/grasp_maps.hpp"

namespace ginet::learn {

/// Smooth-L1 loss over (B, 4, H, W) map stacks: z = d^2 / 2 when |d| < 1,
/// |d| - 1/2 otherwise. Averaged per head, summed over the four heads.
torch::Tensor huber_loss(const torch::Tensor& target, const torch::Tensor& prediction);

double huber_loss(const GraspMapSet& target, const GraspMapSet& prediction);

}  // namespace ginet::learn
