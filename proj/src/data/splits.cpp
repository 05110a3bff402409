#include "data/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/random.hpp"

namespace ginet::data {

namespace {

std::size_t floor_count(double fraction, std::size_t n) {
  // Tolerates products like 0.3 * 10 landing a hair under an integer.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::vector<std::string> shuffled(std::vector<std::string> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[rng.below(i)]);
  }
  return ids;
}

}  // namespace

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::Config, "test_fraction must lie in (0, 1)");
  }
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    fail(ErrorCode::Config, "label_fraction must lie in (0, 1]");
  }
}

std::vector<std::string> Splits::train_all() const {
  std::vector<std::string> all = train_labelled;
  all.insert(all.end(), train_unlabelled.begin(), train_unlabelled.end());
  std::sort(all.begin(), all.end());
  return all;
}

Splits make_splits(const std::vector<std::string>& ids, const SplitSpec& spec) {
  spec.validate();
  if (ids.empty()) fail(ErrorCode::InvalidArgument, "cannot split an empty id list");
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    fail(ErrorCode::InvalidArgument, "scene ids must be unique");
  }
  const auto order = shuffled(ids, derive_seed(spec.seed, "split"));
  const std::size_t n_test = floor_count(spec.test_fraction, order.size());
  const std::size_t n_train = order.size() - n_test;
  const std::size_t n_label =
      n_train == 0 ? 0 : std::clamp<std::size_t>(floor_count(spec.label_fraction, n_train), 1, n_train);

  Splits out;
  out.test.assign(order.begin(), order.begin() + static_cast<long>(n_test));
  out.train_labelled.assign(order.begin() + static_cast<long>(n_test),
                            order.begin() + static_cast<long>(n_test + n_label));
  out.train_unlabelled.assign(order.begin() + static_cast<long>(n_test + n_label), order.end());
  for (auto* v : {&out.test, &out.train_labelled, &out.train_unlabelled}) std::sort(v->begin(), v->end());
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> carve_out(
    const std::vector<std::string>& ids, double fraction, std::uint64_t seed) {
  const auto order = shuffled(ids, derive_seed(seed, "carve-out"));
  std::size_t n_out = floor_count(fraction, order.size());
  if (n_out == 0 && order.size() >= 2 && fraction > 0.0) n_out = 1;
  std::vector<std::string> held(order.begin(), order.begin() + static_cast<long>(n_out));
  std::vector<std::string> kept(order.begin() + static_cast<long>(n_out), order.end());
  std::sort(held.begin(), held.end());
  std::sort(kept.begin(), kept.end());
  return {kept, held};
}

std::vector<std::string> select_subset(const std::vector<std::string>& ids, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorCode::Config, "subset_fraction must lie in (0, 1]");
  auto order = shuffled(ids, derive_seed(seed, "subset"));
  order.resize(std::clamp<std::size_t>(floor_count(fraction, order.size()), std::min<std::size_t>(1, order.size()),
                                       order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace ginet::data
