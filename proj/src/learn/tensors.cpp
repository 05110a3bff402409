#include "learn/tensors.hpp"

#include <cstring>

#include "core/error.hpp"

namespace ginet::learn {

torch::Tensor maps_to_tensor(const GraspMapSet& maps) {
  const int rows = maps.rows();
  const int cols = maps.cols();
  auto out = torch::empty({1, 4, rows, cols}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  const Grid<float>* grids[] = {&maps.quality, &maps.sin2, &maps.cos2, &maps.width};
  for (int k = 0; k < 4; ++k) {
    if (grids[k]->rows() != rows || grids[k]->cols() != cols) fail(ErrorCode::Shape, "grasp maps differ in shape");
    std::memcpy(dst + k * plane, grids[k]->data(), plane * sizeof(float));
  }
  return out;
}

GraspMapSet maps_from_tensor(const torch::Tensor& maps, int index) {
  if (maps.dim() != 4 || maps.size(1) != 4 || index < 0 || index >= maps.size(0)) {
    fail(ErrorCode::Shape, "expected a (B, 4, H, W) map tensor");
  }
  const auto item = maps[index].detach().to(torch::kFloat32).contiguous();
  const int rows = static_cast<int>(item.size(1));
  const int cols = static_cast<int>(item.size(2));
  GraspMapSet out(rows, cols);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  const float* src = item.data_ptr<float>();
  Grid<float>* grids[] = {&out.quality, &out.sin2, &out.cos2, &out.width};
  for (int k = 0; k < 4; ++k) std::memcpy(grids[k]->data(), src + k * plane, plane * sizeof(float));
  return out;
}

torch::Tensor input_to_tensor(const data::InputTensor& input) {
  auto out = torch::empty({1, input.channels, input.rows, input.cols}, torch::kFloat32);
  std::memcpy(out.data_ptr<float>(), input.data.data(), input.data.size() * sizeof(float));
  return out;
}

Sample make_sample(const data::AugmentedScene& crop, data::InputMode mode) {
  Sample s;
  s.id = crop.scene.id;
  s.input = input_to_tensor(data::normalize_input(crop.scene, mode));
  s.positives = crop.scene.positives;
  s.target = maps_to_tensor(encode_target_maps(s.positives, crop.scene.rows(), crop.scene.cols()));
  return s;
}

Batch collate(const std::vector<Sample>& samples) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "cannot build an empty batch");
  Batch b;
  std::vector<torch::Tensor> inputs;
  std::vector<torch::Tensor> targets;
  for (const auto& s : samples) {
    b.ids.push_back(s.id);
    inputs.push_back(s.input);
    targets.push_back(s.target);
  }
  b.input = torch::cat(inputs, 0);
  b.target = torch::cat(targets, 0);
  return b;
}

}  // namespace ginet::learn
