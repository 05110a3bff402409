#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/grasp.hpp"
#include "core/grasp_maps.hpp"
#include "data/augment.hpp"
#include "data/cornell.hpp"
#include "learn/model.hpp"

namespace ginet::learn {

inline constexpr const char* kEvalReportSchema = "ginet-eval-report/1";

/// Published accuracies (percent) for the comparison block of a report.
struct Baseline {
  const char* name;
  double accuracy;
};
inline constexpr Baseline kBaselines[] = {{"gg-cnn", 73.0}, {"gr-convnet", 97.7}, {"gi-nnet", 98.87}};

struct SceneOutcome {
  std::string id;
  bool passed = false;
  ImageGrasp grasp;  // top-1, crop coordinates
};

struct EvalReport {
  std::string model;
  std::string checkpoint;
  MetricThresholds thresholds;
  std::int64_t parameters = 0;
  int excluded = 0;                   // scenes without positives in the crop
  std::vector<SceneOutcome> scenes;   // sorted by id

  int passed() const;
  /// Mean of the pass list; 0 for an empty report.
  double accuracy() const;
  std::string to_text() const;
};

/// Maps a centered 224 x 224 crop to grasp maps. Lets tests plug in oracle
/// or degenerate predictors.
using MapPredictor = std::function<GraspMapSet(const data::AugmentedScene& crop)>;

MapPredictor model_predictor(GraspModel& model);

/// Grasp maps for one crop (model switched to evaluation mode).
GraspMapSet predict_maps(GraspModel& model, const data::SceneRecord& crop);

/// Top-1 evaluation over the given scenes. Order of `ids` does not matter.
EvalReport evaluate(const MapPredictor& predictor, const data::CacheIndex& index,
                    const std::vector<std::string>& ids, const MetricThresholds& thresholds,
                    const DecodeOptions& decode = {});

}  // namespace ginet::learn
