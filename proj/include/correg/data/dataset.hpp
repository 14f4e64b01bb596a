#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "correg/ndgrad/array.hpp"

namespace correg::data {

// Features plus strictly positive targets. Targets at or below zero are
// shifted at construction (the applied offset is recorded) because the rank
// losses supervise with target ratios.
struct Dataset {
  ndgrad::Array features;  // n x d
  std::vector<double> targets;
  std::string name;
  double target_shift = 0.0;
  std::vector<std::size_t> contaminated;  // indices touched by label noise

  std::size_t size() const { return targets.size(); }
  std::size_t dim() const { return features.cols(); }

  // Applies the positive-shift policy and validates the invariants.
  static Dataset create(ndgrad::Array features, std::vector<double> raw_targets,
                        std::string name);
};

struct SplitSpec {
  double train_frac = 0.60;
  double val_frac = 0.15;
  double test_frac = 0.25;
  std::uint64_t seed = 0;

  void validate() const;  // fractions positive, summing to 1 within 1e-9
};

struct Splits {
  Dataset train, val, test;
};

// Linear task: features uniform in (-1, 1), target = w.x + b + gaussian
// noise, then shifted positive. Deterministic per seed.
Dataset gen_linear(std::size_t n, std::size_t d, double noise_std, std::uint64_t seed);

// Rank-heavy task: target = exp(w.x) * (1 + u), u uniform in (-noise, noise);
// strictly positive by construction.
Dataset gen_monotone(std::size_t n, std::size_t d, std::uint64_t seed, double noise = 0.05);

// Replaces a seeded fraction of targets with target * (1 + magnitude) and
// records the touched indices.
Dataset gen_outlier_contaminated(const Dataset& base, double contaminate_frac,
                                 double magnitude, std::uint64_t seed);

// Header row required; the target column must be numeric everywhere. Feature
// columns are the non-target columns whose first data row parses as a
// number; a later non-numeric cell in one of them is an error naming the row.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

// Seeded permutation, then contiguous slices; val and test take
// floor(frac * n) rows and train keeps the remainder.
Splits split(const Dataset& ds, const SplitSpec& spec);

}  // namespace correg::data
