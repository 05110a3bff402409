#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ginet::data {

struct SplitSpec {
  double test_fraction = 0.1;
  /// Fraction of the training portion whose labels are used.
  double label_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Image-wise partition. Every subset is sorted by id.
struct Splits {
  std::vector<std::string> train_labelled;
  std::vector<std::string> train_unlabelled;
  std::vector<std::string> test;

  /// Labelled and unlabelled training ids together, sorted.
  std::vector<std::string> train_all() const;
};

/// Shuffles ids with the seed, takes floor(test_fraction * n) for test, then
/// floor(label_fraction * n_train) (at least one) of the remainder as
/// labelled training data.
Splits make_splits(const std::vector<std::string>& ids, const SplitSpec& spec);

/// Deterministic hold-out of floor(fraction * n) ids (at least one when two
/// or more are available). Returns {kept, held_out}.
std::pair<std::vector<std::string>, std::vector<std::string>> carve_out(
    const std::vector<std::string>& ids, double fraction, std::uint64_t seed);

/// Seeded sample of floor(fraction * n) ids (at least one), sorted. A
/// fraction of 1 returns every id.
std::vector<std::string> select_subset(const std::vector<std::string>& ids, double fraction,
                                       std::uint64_t seed);

}  // namespace ginet::data
