#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "correg/ndgrad/ops.hpp"
#include "correg/rng.hpp"

namespace correg::losses {

// Every knob of the training objectives. Field names are fixed by the run
// config file format.
struct LossConfig {
  double outlier_fraction = 0.10;   // share of each batch routed to the MSE branch
  double alpha = 0.25;              // width of the similarity band
  double w_plc = 1.0;
  double w_src = 1.0;
  double w_mse = 0.1;               // MSE anchor weight in the correlation phase
  std::size_t tuple_budget = 512;   // max sampled triplets per batch
  double epsilon = 1e-12;           // denominator guard; 0 disables it

  void validate() const;
};

// Paired predictions/targets/embeddings for one training step. predictions
// is a rank-1 node of length m; embeddings are m rank-1 nodes from the same
// graph. outlier_mask is filled by loss_plc (values only, no gradients).
struct Batch {
  ndgrad::Node predictions;
  std::vector<double> targets;
  std::vector<ndgrad::Node> embeddings;
  std::vector<bool> outlier_mask;

  std::size_t size() const { return targets.size(); }
};

enum class Phase { kWarmup, kCorrelation };

// (1/m) sum (pred_i - target_i)^2.
ndgrad::Node loss_mse(ndgrad::Node pred, std::span<const double> target);

// Flags exactly floor(fraction * m) samples, those with the largest
// |pred - target|; ties broken toward the lower index. Pure value function:
// callers pass detached prediction values.
std::vector<bool> select_outliers(std::span<const double> pred,
                                  std::span<const double> target, double fraction);

// Robust correlation loss: squared error averaged over the flagged outliers
// plus, over the remaining samples,
//   1 - r^2 + (mean_p - mean_t)^2 + (std_p - std_t)^2
// with r the Pearson correlation and std the population standard deviation.
// Gradient flows through both branches but not through the mask. Fills
// batch.outlier_mask.
ndgrad::Node loss_plc(Batch& batch, const LossConfig& cfg);

// Target ratio folded into (0, 1]: min(r_i/r_j, r_j/r_i). Requires positive
// inputs; equals 1 iff the targets match.
double proxy_similarity(double r_i, double r_j);

// Band constraint on one pair: nothing when p < |s| < p + alpha, otherwise
// the squared distance of |s| to the band's lower edge p.
std::optional<ndgrad::Node> loss_coarse(ndgrad::Node s_ij, double p_ij, double alpha);

// Bidirectional hinge on a target-descending triplet (targets[i] >
// targets[j] > targets[k]): similarity gaps toward the far pair must exceed
// the matching proxy-similarity margins. Margins are plain constants; only
// the similarities carry gradient.
ndgrad::Node loss_fine(const std::array<std::size_t, 3>& tuple, Batch& batch,
                       const LossConfig& cfg);

struct SrcLoss {
  ndgrad::Node value;
  bool degenerate = false;       // no violating pair and no usable triplet
  std::size_t violating_pairs = 0;
  std::size_t fine_tuples = 0;   // triplets after budget sampling
};

// Rank loss over the batch: mean band penalty over the out-of-band pairs
// plus mean triplet hinge over target-descending triplets whose three pairs
// all sit inside the band. Triplets beyond cfg.tuple_budget are sampled
// deterministically from rng.
SrcLoss loss_src(Batch& batch, const LossConfig& cfg, Rng& rng);

struct TotalLoss {
  ndgrad::Node value;
  double mse = 0.0;  // component forward values, unweighted
  double plc = 0.0;
  double src = 0.0;
};

// Warm-up phase trains the plain MSE; the correlation phase combines
// w_mse * MSE + w_plc * loss_plc + w_src * loss_src. Zero-weight terms are
// skipped entirely.
TotalLoss loss_total(Batch& batch, const LossConfig& cfg, Phase phase, Rng& rng);

}  // namespace correg::losses
