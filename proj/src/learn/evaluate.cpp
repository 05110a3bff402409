#include "learn/evaluate.hpp"

#include <algorithm>
#include <sstream>

#include "core/error.hpp"
#include "core/kv.hpp"
#include "learn/tensors.hpp"

namespace ginet::learn {

int EvalReport::passed() const {
  return static_cast<int>(std::count_if(scenes.begin(), scenes.end(), [](const auto& s) { return s.passed; }));
}

double EvalReport::accuracy() const {
  return scenes.empty() ? 0.0 : static_cast<double>(passed()) / static_cast<double>(scenes.size());
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "schema=" << kEvalReportSchema << "\n";
  out << "model=" << model << "\n";
  out << "checkpoint=" << checkpoint << "\n";
  out << "iou_min=" << format_double(thresholds.iou_min) << "\n";
  out << "angle_max_deg=" << format_double(thresholds.angle_max_deg) << "\n";
  out << "scenes=" << scenes.size() << "\n";
  out << "excluded=" << excluded << "\n";
  out << "passed=" << passed() << "\n";
  out << "accuracy=" << format_double(accuracy()) << "\n";
  out << "params.model=" << parameters << "\n";
  out << "params.gr-convnet=" << nn::kGRConvNetParams << "\n";
  for (const auto& b : kBaselines) out << "baseline." << b.name << "=" << format_double(b.accuracy) << "\n";
  for (const auto& s : scenes) {
    out << "scene=" << s.id << " pass=" << (s.passed ? 1 : 0) << " row=" << format_double(s.grasp.center.row)
        << " col=" << format_double(s.grasp.center.col) << " angle_deg="
        << format_double(s.grasp.angle * 180.0 / std::numbers::pi) << " width_px=" << format_double(s.grasp.width)
        << " quality=" << format_double(s.grasp.quality) << "\n";
  }
  return out.str();
}

GraspMapSet predict_maps(GraspModel& model, const data::SceneRecord& crop) {
  torch::NoGradGuard no_grad;
  model.eval();
  const auto x = input_to_tensor(data::normalize_input(crop, model.input_mode()));
  return maps_from_tensor(model.forward(x));
}

MapPredictor model_predictor(GraspModel& model) {
  return [&model](const data::AugmentedScene& crop) { return predict_maps(model, crop.scene); };
}

EvalReport evaluate(const MapPredictor& predictor, const data::CacheIndex& index,
                    const std::vector<std::string>& ids, const MetricThresholds& thresholds,
                    const DecodeOptions& decode) {
  thresholds.validate();
  if (ids.empty()) fail(ErrorCode::InvalidArgument, "evaluation needs at least one scene");
  std::vector<std::string> order = ids;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  EvalReport report;
  report.thresholds = thresholds;
  for (const auto& id : order) {
    const data::AugmentedScene crop = data::center_crop(data::load_cached_scene(index, id));
    if (crop.scene.positives.empty()) {
      ++report.excluded;
      continue;
    }
    const GraspMapSet maps = predictor(crop);
    SceneOutcome outcome;
    outcome.id = id;
    outcome.grasp = decode_grasps(maps, 1, decode).front();
    outcome.passed = rectangle_metric(outcome.grasp, crop.scene.positives, thresholds);
    report.scenes.push_back(outcome);
  }
  return report;
}

}  // namespace ginet::learn
