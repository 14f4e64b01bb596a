#include "correg/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace correg::losses {

namespace nd = correg::ndgrad;

namespace {

void check_lengths(const char* op, std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": length mismatch " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}

// (|s| - p)^2 against the band's lower edge.
nd::Node band_penalty(nd::Node abs_s, double p) {
  nd::Graph& g = abs_s.graph();
  return nd::square(nd::sub(abs_s, g.constant(p)));
}

bool in_band(double abs_s, double p, double alpha) { return p < abs_s && abs_s < p + alpha; }

// One hinge: max{0, margin - gap}.
nd::Node hinge(nd::Graph& g, double margin, nd::Node gap) {
  return nd::max_with_zero(nd::sub(g.constant(margin), gap));
}

}  // namespace

void LossConfig::validate() const {
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 0.5)) {
    throw std::invalid_argument("LossConfig: outlier_fraction must lie in [0, 0.5), got " +
                                std::to_string(outlier_fraction));
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("LossConfig: alpha must be positive, got " +
                                std::to_string(alpha));
  }
  if (w_plc < 0.0 || w_src < 0.0 || w_mse < 0.0) {
    throw std::invalid_argument("LossConfig: loss weights must be nonnegative");
  }
  if (epsilon < 0.0) throw std::invalid_argument("LossConfig: epsilon must be >= 0");
}

nd::Node loss_mse(nd::Node pred, std::span<const double> target) {
  check_lengths("loss_mse", pred.value().size(), target.size());
  nd::Graph& g = pred.graph();
  nd::Node t = g.constant(nd::Array::vector({target.begin(), target.end()}));
  return nd::mean(nd::square(nd::sub(pred, t)));
}

std::vector<bool> select_outliers(std::span<const double> pred,
                                  std::span<const double> target, double fraction) {
  check_lengths("select_outliers", pred.size(), target.size());
  const std::size_t m = pred.size();
  const std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m)));
  std::vector<bool> mask(m, false);
  if (k == 0) return mask;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> err(m);
  for (std::size_t i = 0; i < m; ++i) err[i] = std::fabs(pred[i] - target[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (err[a] != err[b]) return err[a] > err[b];
    return a < b;  // ties: lower index first
  });
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return mask;
}

nd::Node loss_plc(Batch& batch, const LossConfig& cfg) {
  const std::size_t m = batch.size();
  check_lengths("loss_plc", batch.predictions.value().size(), m);

  batch.outlier_mask =
      select_outliers(batch.predictions.value().data(), batch.targets, cfg.outlier_fraction);
  std::vector<std::size_t> normal, outlier;
  for (std::size_t i = 0; i < m; ++i) {
    (batch.outlier_mask[i] ? outlier : normal).push_back(i);
  }
  if (normal.size() < 2) {
    throw std::invalid_argument(
        "loss_plc: fewer than 2 normal samples remain; increase the batch size or lower "
        "outlier_fraction");
  }

  nd::Graph& g = batch.predictions.graph();
  const double eps = cfg.epsilon;

  auto subset_targets = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> t;
    t.reserve(idx.size());
    for (std::size_t i : idx) t.push_back(batch.targets[i]);
    return t;
  };

  // Normal branch: 1 - r^2 plus mean and spread penalties.
  nd::Node pred_n = nd::gather(batch.predictions, normal);
  nd::Node targ_n = g.constant(nd::Array::vector(subset_targets(normal)));
  nd::Node mu_p = nd::mean(pred_n);
  nd::Node mu_t = nd::mean(targ_n);
  nd::Node cp = nd::sub(pred_n, mu_p);
  nd::Node ct = nd::sub(targ_n, mu_t);
  nd::Node r = nd::div(nd::dot(cp, ct),
                       nd::mul(nd::l2_norm(cp, eps), nd::l2_norm(ct, eps)), eps);
  nd::Node one = g.constant(1.0);
  nd::Node corr_term = nd::sub(one, nd::square(r));
  nd::Node mean_term = nd::square(nd::sub(mu_p, mu_t));
  nd::Node std_term = nd::square(
      nd::sub(nd::sqrt(nd::variance(pred_n), eps), nd::sqrt(nd::variance(targ_n), eps)));
  nd::Node normal_loss = nd::add(nd::add(corr_term, mean_term), std_term);

  if (outlier.empty()) return normal_loss;

  // Outlier branch: squared error averaged over its own subset.
  nd::Node pred_o = nd::gather(batch.predictions, outlier);
  nd::Node outlier_loss = loss_mse(pred_o, subset_targets(outlier));
  return nd::add(outlier_loss, normal_loss);
}

double proxy_similarity(double r_i, double r_j) {
  if (!(r_i > 0.0) || !(r_j > 0.0)) {
    throw std::domain_error("proxy_similarity: targets must be positive, got " +
                            std::to_string(r_i) + " and " + std::to_string(r_j));
  }
  // fold the ratio into (0, 1]; min/max keeps the result exactly symmetric
  return std::min(r_i, r_j) / std::max(r_i, r_j);
}

std::optional<nd::Node> loss_coarse(nd::Node s_ij, double p_ij, double alpha) {
  nd::Node abs_s = nd::abs(s_ij);
  if (in_band(abs_s.value().scalar_value(), p_ij, alpha)) return std::nullopt;
  return band_penalty(abs_s, p_ij);
}

nd::Node loss_fine(const std::array<std::size_t, 3>& tuple, Batch& batch,
                   const LossConfig& cfg) {
  const auto [i, j, k] = tuple;
  const double ri = batch.targets.at(i), rj = batch.targets.at(j), rk = batch.targets.at(k);
  if (!(ri > rj && rj > rk)) {
    throw std::invalid_argument("loss_fine: targets must be strictly descending across the "
                                "tuple; sort and drop tied triplets first");
  }
  nd::Graph& g = batch.predictions.graph();
  const double eps = cfg.epsilon;
  nd::Node s_ij = nd::abs(nd::cosine_similarity(batch.embeddings.at(i), batch.embeddings.at(j), eps));
  nd::Node s_ik = nd::abs(nd::cosine_similarity(batch.embeddings.at(i), batch.embeddings.at(k), eps));
  nd::Node s_jk = nd::abs(nd::cosine_similarity(batch.embeddings.at(j), batch.embeddings.at(k), eps));

  const double margin_ascent = proxy_similarity(ri, rj) - proxy_similarity(ri, rk);
  const double margin_descent = proxy_similarity(rj, rk) - proxy_similarity(ri, rk);
  nd::Node ascent = hinge(g, margin_ascent, nd::sub(s_ij, s_ik));
  nd::Node descent = hinge(g, margin_descent, nd::sub(s_jk, s_ik));
  return nd::add(ascent, descent);
}

SrcLoss loss_src(Batch& batch, const LossConfig& cfg, Rng& rng) {
  const std::size_t m = batch.size();
  if (m < 2) {
    throw std::invalid_argument("loss_src: need at least 2 samples, got " + std::to_string(m));
  }
  check_lengths("loss_src", batch.embeddings.size(), m);
  for (double t : batch.targets) {
    if (!(t > 0.0)) {
      throw std::domain_error("loss_src: targets must be strictly positive");
    }
  }

  nd::Graph& g = batch.predictions.graph();
  const double eps = cfg.epsilon;

  // All pairwise |cosine| nodes, proxies and band membership (on values).
  std::vector<nd::Node> abs_sim(m * m);
  std::vector<double> proxy(m * m, 0.0);
  std::vector<bool> banded(m * m, false);
  std::vector<nd::Node> coarse_terms;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      nd::Node s =
          nd::abs(nd::cosine_similarity(batch.embeddings[i], batch.embeddings[j], eps));
      const double p = proxy_similarity(batch.targets[i], batch.targets[j]);
      abs_sim[i * m + j] = s;
      proxy[i * m + j] = p;
      const bool ok = in_band(s.value().scalar_value(), p, cfg.alpha);
      banded[i * m + j] = ok;
      if (!ok) coarse_terms.push_back(band_penalty(s, p));
    }
  }
  auto pair_at = [m](std::size_t a, std::size_t b) {
    return a < b ? a * m + b : b * m + a;
  };

  // Target-descending triplets whose three pairs all sit inside the band.
  std::vector<std::array<std::size_t, 3>> tuples;
  for (std::size_t a = 0; a + 2 < m; ++a) {
    for (std::size_t b = a + 1; b + 1 < m; ++b) {
      for (std::size_t c = b + 1; c < m; ++c) {
        if (!(banded[pair_at(a, b)] && banded[pair_at(a, c)] && banded[pair_at(b, c)]))
          continue;
        std::array<std::size_t, 3> t{a, b, c};
        std::sort(t.begin(), t.end(), [&](std::size_t u, std::size_t v) {
          return batch.targets[u] > batch.targets[v];
        });
        if (batch.targets[t[0]] > batch.targets[t[1]] &&
            batch.targets[t[1]] > batch.targets[t[2]]) {
          tuples.push_back(t);
        }
      }
    }
  }
  if (tuples.size() > cfg.tuple_budget) {
    // deterministic partial shuffle, keep the first tuple_budget
    for (std::size_t i = 0; i < cfg.tuple_budget; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.integer(tuples.size() - i));
      std::swap(tuples[i], tuples[j]);
    }
    tuples.resize(cfg.tuple_budget);
  }

  std::vector<nd::Node> fine_terms;
  fine_terms.reserve(2 * tuples.size());
  for (const auto& t : tuples) {
    const auto [i, j, k] = t;
    const double p_ij = proxy[pair_at(i, j)], p_ik = proxy[pair_at(i, k)],
                 p_jk = proxy[pair_at(j, k)];
    nd::Node s_ij = abs_sim[pair_at(i, j)];
    nd::Node s_ik = abs_sim[pair_at(i, k)];
    nd::Node s_jk = abs_sim[pair_at(j, k)];
    fine_terms.push_back(hinge(g, p_ij - p_ik, nd::sub(s_ij, s_ik)));
    fine_terms.push_back(hinge(g, p_jk - p_ik, nd::sub(s_jk, s_ik)));
  }

  SrcLoss out;
  out.violating_pairs = coarse_terms.size();
  out.fine_tuples = tuples.size();
  nd::Node total = g.constant(0.0);
  if (!coarse_terms.empty()) total = nd::add(total, nd::mean(nd::stack(coarse_terms)));
  if (!fine_terms.empty()) {
    // mean over tuples of (ascent + descent): pair up the stacked terms
    nd::Node summed = nd::sum(nd::stack(fine_terms));
    total = nd::add(total, nd::scalar_mul(1.0 / static_cast<double>(tuples.size()), summed));
  }
  out.degenerate = coarse_terms.empty() && fine_terms.empty();
  out.value = total;
  return out;
}

TotalLoss loss_total(Batch& batch, const LossConfig& cfg, Phase phase, Rng& rng) {
  cfg.validate();
  TotalLoss out;
  nd::Node mse = loss_mse(batch.predictions, batch.targets);
  out.mse = mse.scalar_value();
  if (phase == Phase::kWarmup) {
    // Warm-up runs the plain MSE regardless of w_mse so the anchor weight
    // can be set to 0 without erasing the warm-up objective.
    out.value = mse;
    return out;
  }

  nd::Node total = nd::scalar_mul(cfg.w_mse, mse);
  if (cfg.w_plc > 0.0) {
    nd::Node plc = loss_plc(batch, cfg);
    out.plc = plc.scalar_value();
    total = nd::add(total, nd::scalar_mul(cfg.w_plc, plc));
  }
  if (cfg.w_src > 0.0) {
    SrcLoss src = loss_src(batch, cfg, rng);
    out.src = src.value.scalar_value();
    total = nd::add(total, nd::scalar_mul(cfg.w_src, src.value));
  }
  out.value = total;
  return out;
}

}  // namespace correg::losses
