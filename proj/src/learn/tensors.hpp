#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "core/grasp_maps.hpp"
#include "data/augment.hpp"

namespace ginet::learn {

/// (1, 4, H, W) float tensor in channel order Q, sin, cos, width.
torch::Tensor maps_to_tensor(const GraspMapSet& maps);

/// Map set of batch item `index` of a (B, 4, H, W) tensor.
GraspMapSet maps_from_tensor(const torch::Tensor& maps, int index = 0);

/// (1, C, H, W) float tensor.
torch::Tensor input_to_tensor(const data::InputTensor& input);

/// One network-ready scene: normalized crop, target maps and the
/// positives expressed in crop coordinates.
struct Sample {
  std::string id;
  torch::Tensor input;
  torch::Tensor target;
  std::vector<GraspRectangle> positives;
};

Sample make_sample(const data::AugmentedScene& crop, data::InputMode mode);

struct Batch {
  std::vector<std::string> ids;
  torch::Tensor input;   // (B, C, H, W)
  torch::Tensor target;  // (B, 4, H, W)
};

Batch collate(const std::vector<Sample>& samples);

}  // namespace ginet::learn
