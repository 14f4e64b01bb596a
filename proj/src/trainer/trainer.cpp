#include "correg/trainer/trainer.hpp"

#include <cmath>
#include <numeric>

#include "correg/rng.hpp"

namespace correg::trainer {

namespace nd = correg::ndgrad;
namespace ls = correg::losses;

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(lr_initial > 0.0)) throw std::invalid_argument("TrainConfig: lr_initial must be > 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) {
    throw std::invalid_argument("TrainConfig: lr_decay_factor must lie in (0, 1)");
  }
  if (lr_decay_period_epochs < 1) {
    throw std::invalid_argument("TrainConfig: lr_decay_period_epochs must be >= 1");
  }
  if (warmup_min_epochs < 0) {
    throw std::invalid_argument("TrainConfig: warmup_min_epochs must be >= 0");
  }
  if (plateau_patience < 1) {
    throw std::invalid_argument("TrainConfig: plateau_patience must be >= 1");
  }
}

void adam_step(std::span<nd::Array* const> params,
               std::span<const nd::Array* const> grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                " params vs " + std::to_string(grads.size()) + " grads");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be > 0");
  if (state.m.empty()) {
    for (const nd::Array* p : params) {
      state.m.push_back(nd::Array::zeros_like(*p));
      state.v.push_back(nd::Array::zeros_like(*p));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: moment count does not match params");
  }

  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    nd::Array& p = *params[i];
    const nd::Array& g = *grads[i];
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adam_step: shape mismatch " + p.shape_str() + " vs " +
                                  g.shape_str() + " at parameter " + std::to_string(i));
    }
    nd::Array& m = state.m[i];
    nd::Array& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  const int steps = epoch / cfg.lr_decay_period_epochs;
  return cfg.lr_initial * std::pow(cfg.lr_decay_factor, static_cast<double>(steps));
}

void PlateauTracker::observe(double val_plc, double val_src) {
  bool improved = false;
  if (val_plc > best_plc) {
    best_plc = val_plc;
    improved = true;
  }
  if (val_src > best_src) {
    best_src = val_src;
    improved = true;
  }
  since_improvement = improved ? 0 : since_improvement + 1;
}

bool should_switch_phase(const TrainState& state, const TrainConfig& cfg) {
  return state.epoch > cfg.warmup_min_epochs &&
         state.plateau.since_improvement >= cfg.plateau_patience;
}

namespace {

nd::Array rows_to_matrix(const data::Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t d = ds.dim();
  std::vector<double> feats(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) feats[i * d + j] = ds.features.at(rows[i], j);
  }
  return nd::Array::matrix(rows.size(), d, std::move(feats));
}

double plain_mse(std::span<const double> pred, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

}  // namespace

TrainResult train(model::MlpRegressor& model, const data::Dataset& train_set,
                  const data::Dataset& val_set, const losses::LossConfig& loss_cfg,
                  const TrainConfig& cfg) {
  cfg.validate();
  loss_cfg.validate();
  if (train_set.size() < 2 || val_set.size() < 2) {
    throw std::invalid_argument("train: train and val splits need at least 2 samples");
  }
  if (train_set.dim() != model.input_dim() || val_set.dim() != model.input_dim()) {
    throw std::invalid_argument("train: dataset dim does not match the model input dim");
  }

  TrainResult result;
  if (cfg.epochs == 0) return result;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const auto params = model.parameters();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    const ls::Phase phase = result.state.phase;

    // per-epoch stream: shuffling first, then any triplet sampling
    Rng epoch_rng(cfg.seed + static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> perm = order;
    epoch_rng.shuffle(perm);

    std::vector<double> losses_this_epoch;
    std::size_t start = 0;
    int step = 0;
    while (start < perm.size()) {
      const std::size_t take = std::min(cfg.batch_size, perm.size() - start);
      if (take < 2) break;  // a 1-sample tail cannot feed the correlation branch
      const std::span<const std::size_t> rows(perm.data() + start, take);
      start += take;
      ++step;

      std::vector<double> targets(take);
      for (std::size_t i = 0; i < take; ++i) targets[i] = train_set.targets[rows[i]];

      try {
        nd::Graph g;
        auto fwd = model.forward(g, rows_to_matrix(train_set, rows));
        ls::Batch batch{fwd.predictions, std::move(targets), std::move(fwd.embeddings), {}};
        const ls::TotalLoss total = ls::loss_total(batch, loss_cfg, phase, epoch_rng);
        const double lv = total.value.scalar_value();
        if (!std::isfinite(lv)) {
          throw TrainAbort("non-finite total loss (mse=" + std::to_string(total.mse) +
                           ", plc=" + std::to_string(total.plc) +
                           ", src=" + std::to_string(total.src) + ")");
        }
        g.backward(total.value);

        std::vector<const nd::Array*> grads;
        grads.reserve(fwd.param_nodes.size());
        for (const nd::Node& p : fwd.param_nodes) grads.push_back(&p.grad());
        adam_step(params, grads, result.state.adam, lr, cfg);
        ++result.state.step_count;
        losses_this_epoch.push_back(lv);
      } catch (const TrainAbort& e) {
        throw TrainAbort("epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                         ": " + e.what());
      } catch (const std::invalid_argument& e) {
        // non-finite values surface as Array construction failures
        throw TrainAbort("epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                         ": " + e.what());
      }
    }

    // epoch-end evaluation (no gradients)
    const auto train_pred = model.predict(train_set.features);
    const auto val_pred = model.predict(val_set.features);
    const auto train_report = metrics::evaluate(train_pred, train_set.targets);
    const auto val_report = metrics::evaluate(val_pred, val_set.targets);

    double mean_loss = 0.0;
    for (double l : losses_this_epoch) mean_loss += l;
    if (!losses_this_epoch.empty()) mean_loss /= static_cast<double>(losses_this_epoch.size());

    result.history.push_back({epoch, phase, lr, "train", train_report, mean_loss});
    result.history.push_back(
        {epoch, phase, lr, "val", val_report, plain_mse(val_pred, val_set.targets)});
    result.step_losses.push_back(std::move(losses_this_epoch));

    result.state.epoch = epoch + 1;
    result.state.plateau.observe(val_report.plc, val_report.src);
    if (result.state.phase == ls::Phase::kWarmup && should_switch_phase(result.state, cfg)) {
      result.state.phase = ls::Phase::kCorrelation;
    }
  }
  return result;
}

}  // namespace correg::trainer
