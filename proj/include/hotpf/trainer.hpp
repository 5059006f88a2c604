#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hotpf/cnn.hpp"
#include "hotpf/dataset.hpp"
#include "hotpf/errors.hpp"
#include "hotpf/rng.hpp"

namespace hotpf {

struct TrainConfig {
  double lr0 = 1e-3;
  int batch = 32;
  int max_epochs = 500;
  int decay_patience = 5;    // consecutive non-improving epochs before decay
  double decay_factor = 10.0;
  double lr_floor = 1e-9;
  double stop_delta_l = 0.01;  // percent, validation early stop
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

enum class StopReason { MaxEpochs, DeltaL };

struct TrainReport {
  std::vector<double> epoch_train_loss;  // raw sum-of-squares, post-update weights
  std::vector<double> epoch_val_loss;    // per-sample normalized, for reporting
  std::vector<double> lr_schedule;       // learning rate in effect each epoch
  std::vector<double> epoch_val_delta_l; // validation stop metric trajectory
  double final_delta_l = 0.0;            // test-set value, this model's term only
  double wall_time = 0.0;
  int epochs_run = 0;
  StopReason stop_reason = StopReason::MaxEpochs;
};

/// Sum over the batch of squared L2 prediction errors (a sum, not a mean).
inline double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeMismatch("loss: shapes differ");
  return (pred - target).squaredNorm();
}

// Adam moments for one parameter array.
struct AdamSlot {
  Eigen::ArrayXXd m, v;
  explicit AdamSlot(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::ArrayXXd::Zero(rows, cols)), v(Eigen::ArrayXXd::Zero(rows, cols)) {}
};

struct AdamState {
  std::vector<AdamSlot> conv_w, conv_b;
  AdamSlot dense_w, dense_b;
  long t = 0;  // completed steps

  explicit AdamState(const CnnModel& model)
      : dense_w(model.dense.w.rows(), model.dense.w.cols()),
        dense_b(model.dense.bias.size(), 1) {
    for (const auto& c : model.conv) {
      conv_w.emplace_back(c.w.rows(), c.w.cols());
      conv_b.emplace_back(c.bias.size(), 1);
    }
  }
};

namespace detail {

inline void adam_update(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
                        AdamSlot& slot, long t, const TrainConfig& cfg, double lr) {
  const Eigen::ArrayXXd g = grad.array();
  slot.m = cfg.adam_beta1 * slot.m + (1.0 - cfg.adam_beta1) * g;
  slot.v = cfg.adam_beta2 * slot.v + (1.0 - cfg.adam_beta2) * g.square();
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  param.array() -= lr * (slot.m / bc1) / ((slot.v / bc2).sqrt() + cfg.adam_eps);
}

}  // namespace detail

/// One bias-corrected Adam step over every parameter of the model.
inline void adam_step(CnnModel& model, const ModelGradients& grads, AdamState& state,
                      const TrainConfig& cfg, double lr) {
  ++state.t;
  for (std::size_t i = 0; i < model.conv.size(); ++i) {
    detail::adam_update(model.conv[i].w, grads.conv_w[i], state.conv_w[i], state.t, cfg, lr);
    Eigen::MatrixXd gb = grads.conv_b[i];
    detail::adam_update(model.conv[i].bias, gb, state.conv_b[i], state.t, cfg, lr);
  }
  detail::adam_update(model.dense.w, grads.dense_w, state.dense_w, state.t, cfg, lr);
  Eigen::MatrixXd gdb = grads.dense_b;
  detail::adam_update(model.dense.bias, gdb, state.dense_b, state.t, cfg, lr);
}

/// Post-training quality ratio in percent: prediction error norm over the
/// DC-vs-AC error norm, each term a Frobenius norm over the full matrix and
/// the V / Theta terms averaged.
inline double delta_l(const Eigen::MatrixXd& pred_v, const Eigen::MatrixXd& pred_th,
                      const Eigen::MatrixXd& dc_v, const Eigen::MatrixXd& dc_th,
                      const Eigen::MatrixXd& ac_v, const Eigen::MatrixXd& ac_th) {
  const double l_i = 0.5 * (dc_v - ac_v).norm() + 0.5 * (dc_th - ac_th).norm();
  const double l_f = 0.5 * (pred_v - ac_v).norm() + 0.5 * (pred_th - ac_th).norm();
  if (l_i == 0.0) throw Error("delta_l: DC result already exact, ratio undefined");
  return 100.0 * l_f / l_i;
}

// Single-target variant used while the V and Theta models train separately:
// the other term drops out of both numerator and denominator.
inline double delta_l_single(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& dc,
                             const Eigen::MatrixXd& ac) {
  const double l_i = (dc - ac).norm();
  if (l_i == 0.0) throw Error("delta_l: DC result already exact, ratio undefined");
  return 100.0 * (pred - ac).norm() / l_i;
}

namespace detail {

// Forward over a sample list in fixed-size chunks; bounds peak memory.
inline Eigen::MatrixXd predict(const CnnModel& model, const Dataset& ds,
                               const std::vector<int>& ids, int chunk = 256) {
  Eigen::MatrixXd out(ds.l, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t b0 = 0; b0 < ids.size(); b0 += static_cast<std::size_t>(chunk)) {
    const std::size_t b1 = std::min(ids.size(), b0 + static_cast<std::size_t>(chunk));
    std::vector<int> slice(ids.begin() + static_cast<std::ptrdiff_t>(b0),
                           ids.begin() + static_cast<std::ptrdiff_t>(b1));
    out.middleCols(static_cast<Eigen::Index>(b0), static_cast<Eigen::Index>(b1 - b0)) =
        model_forward(model, ds.gather(slice));
  }
  return out;
}

}  // namespace detail

/// Trains one model in place. Per epoch: seeded shuffle of the training
/// ordinals, Adam updates per batch (short final batch included), then an
/// evaluation pass with the post-update weights. The learning rate divides
/// by decay_factor whenever the recorded training loss fails to improve on
/// its running minimum for decay_patience consecutive epochs (never below
/// lr_floor). Training stops at max_epochs or when the validation-set
/// delta-L falls under stop_delta_l percent.
inline TrainReport train(CnnModel& model, const Dataset& ds, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (ds.split.train.empty()) throw Error("train: dataset has no training split");
  if (cfg.batch < 1 || cfg.batch > static_cast<int>(ds.split.train.size()))
    throw Error("train: batch size must be in [1, |train|]");

  const Eigen::MatrixXd& dc_channel = model.target == Target::V ? ds.x[0] : ds.x[1];
  auto gather_cols = [&](const Eigen::MatrixXd& m, const std::vector<int>& ids) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i)
      out.col(static_cast<Eigen::Index>(i)) = m.col(ids[i]);
    return out;
  };

  const Eigen::MatrixXd train_targets = ds.gather_targets(ds.split.train, model.target);
  const Eigen::MatrixXd val_targets = ds.gather_targets(ds.split.val, model.target);
  const Eigen::MatrixXd val_dc = gather_cols(dc_channel, ds.split.val);

  AdamState state(model);
  TrainReport report;
  double lr = cfg.lr0;
  double best_train_loss = std::numeric_limits<double>::infinity();
  int stall = 0;

  std::vector<int> order(ds.split.train);
  ForwardCache cache;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng::Stream shuffle_stream(rng::mix(cfg.seed, rng::kTagShuffle,
                                        static_cast<std::uint64_t>(epoch)));
    order.assign(ds.split.train.begin(), ds.split.train.end());
    rng::shuffle(order, shuffle_stream);

    const int nbatches = (static_cast<int>(order.size()) + cfg.batch - 1) / cfg.batch;
    for (int bi = 0; bi < nbatches; ++bi) {
      const int lo = bi * cfg.batch;
      const int hi = std::min<int>(lo + cfg.batch, static_cast<int>(order.size()));
      std::vector<int> ids(order.begin() + lo, order.begin() + hi);
      FeatureMap input = ds.gather(ids);
      Eigen::MatrixXd target = ds.gather_targets(ids, model.target);
      Eigen::MatrixXd pred = model_forward(model, input, &cache);
      const double batch_loss = loss(pred, target);
      if (!std::isfinite(batch_loss)) throw NonFiniteLoss(epoch, bi);
      Eigen::MatrixXd grad = 2.0 * (pred - target);
      ModelGradients grads = model_backward(model, cache, grad);
      adam_step(model, grads, state, cfg, lr);
    }

    // evaluation pass with the weights this epoch ends with
    const Eigen::MatrixXd train_pred = detail::predict(model, ds, ds.split.train);
    const double train_loss = loss(train_pred, train_targets);
    if (!std::isfinite(train_loss)) throw NonFiniteLoss(epoch, -1);
    const Eigen::MatrixXd val_pred = detail::predict(model, ds, ds.split.val);
    const double val_loss = ds.split.val.empty()
                                ? 0.0
                                : loss(val_pred, val_targets) / static_cast<double>(ds.split.val.size());
    const double val_dl = ds.split.val.empty()
                              ? 100.0
                              : delta_l_single(val_pred, val_dc, val_targets);

    report.epoch_train_loss.push_back(train_loss);
    report.epoch_val_loss.push_back(val_loss);
    report.lr_schedule.push_back(lr);
    report.epoch_val_delta_l.push_back(val_dl);
    report.epochs_run = epoch;

    if (val_dl < cfg.stop_delta_l) {
      report.stop_reason = StopReason::DeltaL;
      break;
    }
    report.stop_reason = StopReason::MaxEpochs;

    if (train_loss < best_train_loss) {
      best_train_loss = train_loss;
      stall = 0;
    } else if (++stall >= cfg.decay_patience) {
      lr = std::max(lr / cfg.decay_factor, cfg.lr_floor);
      stall = 0;
    }
  }

  // test-set quality, this model's term of the error ratio
  if (!ds.split.test.empty()) {
    const Eigen::MatrixXd test_pred = detail::predict(model, ds, ds.split.test);
    report.final_delta_l = delta_l_single(test_pred, gather_cols(dc_channel, ds.split.test),
                                          ds.gather_targets(ds.split.test, model.target));
  }
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline void save_report(const TrainReport& r, const std::string& path) {
  io::json j{{"kind", "train_report"},
             {"epoch_train_loss", r.epoch_train_loss},
             {"epoch_val_loss", r.epoch_val_loss},
             {"lr_schedule", r.lr_schedule},
             {"epoch_val_delta_l", r.epoch_val_delta_l},
             {"final_delta_l", r.final_delta_l},
             {"wall_time", r.wall_time},
             {"epochs_run", r.epochs_run},
             {"stop_reason", r.stop_reason == StopReason::DeltaL ? "delta_l" : "max_epochs"}};
  auto os = io::open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace hotpf
