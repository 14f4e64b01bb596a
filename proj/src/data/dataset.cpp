#include "correg/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "correg/data/csv.hpp"
#include "correg/rng.hpp"

namespace correg::data {

namespace nd = correg::ndgrad;

Dataset Dataset::create(nd::Array features, std::vector<double> raw_targets,
                        std::string name) {
  if (features.rank() != 2) {
    throw std::invalid_argument("Dataset: features must be a matrix, got " +
                                features.shape_str());
  }
  if (features.rows() != raw_targets.size()) {
    throw std::invalid_argument("Dataset: " + std::to_string(features.rows()) +
                                " feature rows vs " + std::to_string(raw_targets.size()) +
                                " targets");
  }
  for (double t : raw_targets) {
    if (!std::isfinite(t)) throw std::invalid_argument("Dataset: non-finite target");
  }

  Dataset ds;
  double lo = raw_targets[0], hi = raw_targets[0];
  for (double t : raw_targets) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (lo <= 0.0) {
    const double range = hi - lo;
    ds.target_shift = -lo + (range > 0.0 ? 0.1 * range : 1.0);
    for (double& t : raw_targets) t += ds.target_shift;
  }
  for (double t : raw_targets) {
    if (!(t > 0.0)) throw std::logic_error("Dataset: target not positive after shift");
  }
  ds.features = std::move(features);
  ds.targets = std::move(raw_targets);
  ds.name = std::move(name);
  return ds;
}

void SplitSpec::validate() const {
  if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0)) {
    throw std::invalid_argument("SplitSpec: fractions must be positive");
  }
  if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("SplitSpec: fractions must sum to 1");
  }
}

Dataset gen_linear(std::size_t n, std::size_t d, double noise_std, std::uint64_t seed) {
  if (n < 10 || d < 1) throw std::invalid_argument("gen_linear: need n >= 10, d >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("gen_linear: noise_std must be >= 0");
  Rng rng(seed);
  std::vector<double> w(d);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  const double b = rng.uniform(-1.0, 1.0);

  std::vector<double> feats(n * d), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = b;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = rng.uniform(-1.0, 1.0);
      feats[i * d + j] = x;
      y += w[j] * x;
    }
    if (noise_std > 0.0) y += rng.normal(0.0, noise_std);
    targets[i] = y;
  }
  return Dataset::create(nd::Array::matrix(n, d, std::move(feats)), std::move(targets),
                         "linear");
}

Dataset gen_monotone(std::size_t n, std::size_t d, std::uint64_t seed, double noise) {
  if (n < 10 || d < 1) throw std::invalid_argument("gen_monotone: need n >= 10, d >= 1");
  if (!(noise >= 0.0 && noise < 1.0)) {
    throw std::invalid_argument("gen_monotone: noise must lie in [0, 1)");
  }
  Rng rng(seed);
  std::vector<double> w(d);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);

  std::vector<double> feats(n * d), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = rng.uniform(-1.0, 1.0);
      feats[i * d + j] = x;
      score += w[j] * x;
    }
    const double u = noise > 0.0 ? rng.uniform(-noise, noise) : 0.0;
    targets[i] = std::exp(score) * (1.0 + u);
  }
  return Dataset::create(nd::Array::matrix(n, d, std::move(feats)), std::move(targets),
                         "monotone");
}

Dataset gen_outlier_contaminated(const Dataset& base, double contaminate_frac,
                                 double magnitude, std::uint64_t seed) {
  if (!(contaminate_frac >= 0.0 && contaminate_frac < 0.5)) {
    throw std::invalid_argument("gen_outlier_contaminated: fraction must lie in [0, 0.5)");
  }
  Dataset out = base;
  out.name = base.name + "+labelnoise";
  const std::size_t n = base.size();
  const std::size_t k =
      static_cast<std::size_t>(std::floor(contaminate_frac * static_cast<double>(n)));
  if (k == 0) return out;

  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.integer(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) out.targets[i] *= 1.0 + magnitude;
  out.contaminated = std::move(idx);
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  const CsvTable t = read_csv(path);
  const auto target_col = t.column(target_column);
  if (!target_col) {
    throw std::runtime_error("load_csv: no column named '" + target_column + "' in " +
                             path.string());
  }
  if (t.rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path.string());

  // feature columns: non-target columns numeric in the first data row
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == *target_col) continue;
    if (parse_cell(t.rows[0][c])) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) {
    throw std::runtime_error("load_csv: no numeric feature columns in " + path.string());
  }

  const std::size_t n = t.rows.size(), d = feature_cols.size();
  std::vector<double> feats(n * d), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tv = parse_cell(t.rows[i][*target_col]);
    if (!tv) {
      throw std::runtime_error("load_csv: non-numeric target at row " + std::to_string(i + 1));
    }
    targets[i] = *tv;
    for (std::size_t j = 0; j < d; ++j) {
      const auto fv = parse_cell(t.rows[i][feature_cols[j]]);
      if (!fv) {
        throw std::runtime_error("load_csv: non-numeric value at row " + std::to_string(i + 1) +
                                 ", column '" + t.header[feature_cols[j]] + "'");
      }
      feats[i * d + j] = *fv;
    }
  }
  return Dataset::create(nd::Array::matrix(n, d, std::move(feats)), std::move(targets),
                         path.stem().string());
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows,
                  const char* suffix) {
  const std::size_t d = ds.dim();
  std::vector<double> feats(rows.size() * d), targets(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) feats[i * d + j] = ds.features.at(rows[i], j);
    targets[i] = ds.targets[rows[i]];
  }
  Dataset out;
  out.features = nd::Array::matrix(rows.size(), d, std::move(feats));
  out.targets = std::move(targets);
  out.name = ds.name + "/" + suffix;
  out.target_shift = ds.target_shift;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::binary_search(ds.contaminated.begin(), ds.contaminated.end(), rows[i])) {
      out.contaminated.push_back(i);
    }
  }
  return out;
}

}  // namespace

Splits split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = ds.size();
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n)));
  const std::size_t n_test =
      static_cast<std::size_t>(std::floor(spec.test_frac * static_cast<double>(n)));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw std::invalid_argument("split: a split would be empty at n = " + std::to_string(n));
  }
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(perm);

  const std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + n_train);
  const std::vector<std::size_t> val_rows(perm.begin() + n_train,
                                          perm.begin() + n_train + n_val);
  const std::vector<std::size_t> test_rows(perm.begin() + n_train + n_val, perm.end());
  return Splits{take_rows(ds, train_rows, "train"), take_rows(ds, val_rows, "val"),
                take_rows(ds, test_rows, "test")};
}

}  // namespace correg::data
