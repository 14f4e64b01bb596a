#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "correg/data/dataset.hpp"
#include "correg/losses/losses.hpp"
#include "correg/metrics/metrics.hpp"
#include "correg/model/mlp.hpp"

namespace correg::trainer {

struct TrainConfig {
  int epochs = 60;                    // desk default; reference protocol runs 160
  std::size_t batch_size = 32;        // reference protocol uses 160
  double lr_initial = 3e-4;
  double lr_decay_factor = 0.25;
  int lr_decay_period_epochs = 70;
  int warmup_min_epochs = 30;
  int plateau_patience = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<ndgrad::Array> m, v;  // first/second moments per parameter
  long step = 0;
};

// One bias-corrected update over all parameter tensors; moments are lazily
// shaped on first use.
void adam_step(std::span<ndgrad::Array* const> params,
               std::span<const ndgrad::Array* const> grads, AdamState& state, double lr,
               const TrainConfig& cfg);

// lr_initial * decay^floor(epoch / period).
double lr_at(int epoch, const TrainConfig& cfg);

// Running bests of the validation PLC/SRC pair; a strict improvement of
// either resets the counter.
struct PlateauTracker {
  double best_plc = -2.0;
  double best_src = -2.0;
  int since_improvement = 0;

  void observe(double val_plc, double val_src);
};

struct TrainState {
  int epoch = 0;  // completed epochs
  losses::Phase phase = losses::Phase::kWarmup;
  AdamState adam;
  PlateauTracker plateau;
  long step_count = 0;
};

// True once more than warmup_min_epochs epochs completed and neither
// validation correlation improved for plateau_patience consecutive epochs.
bool should_switch_phase(const TrainState& state, const TrainConfig& cfg);

struct HistoryRow {
  int epoch = 0;  // 0-based
  losses::Phase phase = losses::Phase::kWarmup;
  double lr = 0.0;
  std::string split;
  metrics::MetricsReport report;
  double loss = 0.0;  // train: mean step loss; val: plain MSE
};

struct TrainResult {
  std::vector<HistoryRow> history;              // two rows per epoch
  std::vector<std::vector<double>> step_losses; // per epoch, per step
  TrainState state;
};

// Raised when a training step produces a non-finite loss; carries the
// epoch/step context in what().
class TrainAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded mini-batch training with the MSE warm-up and the two-condition
// phase switch. Deterministic for fixed seeds.
TrainResult train(model::MlpRegressor& model, const data::Dataset& train_set,
                  const data::Dataset& val_set, const losses::LossConfig& loss_cfg,
                  const TrainConfig& cfg);

}  // namespace correg::trainer
