#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "nextvisit/config.hpp"
#include "nextvisit/losses.hpp"
#include "nextvisit/model.hpp"
#include "nextvisit/sequence.hpp"

namespace nextvisit {

/// Optimisation settings. Key names follow the reference training table
/// (learning_rate, min_lr, warmup_iters, ...); `temporal_decay` is lambda.
struct TrainConfig {
  double lambda = 0.5;
  double w_min = 0.01;
  double learning_rate = 3e-3;
  double min_lr = 3e-4;
  bool decay_lr = true;
  long warmup_iters = 100;
  long lr_decay_iters = 20000;
  long max_iters = 20000;
  int batch_size = 16;
  int grad_accum_steps = 1;
  double grad_clip = 1.0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.95;
  int max_epochs = 20;
  int patience = 5;
  long eval_interval = 500;
  bool early_stop_weighted = true;  // early stopping on the training objective
  std::uint64_t seed = 1;

  /// Full-scale reference values (n_embd 1024 etc. live in ModelConfig).
  static TrainConfig full_scale();
  static TrainConfig from_config(const KeyValueConfig& kv);
  static TrainConfig from_config(const KeyValueConfig& kv, TrainConfig base);
  void validate() const;
  /// Linear warmup to learning_rate, cosine decay to min_lr at
  /// lr_decay_iters, min_lr afterwards.
  double lr_at(long it) const;
};

ModelConfig model_config_from(const KeyValueConfig& kv, ModelConfig base = {});

/// Training rows for one objective: packed visit windows for the next-visit
/// model, token streams for the baselines.
struct TrainData {
  Objective objective = Objective::Raven;
  std::vector<PackedRow> rows;
  std::vector<TokenSequence> seqs;
  std::size_t size() const { return objective == Objective::Raven ? rows.size() : seqs.size(); }
};

TrainData make_train_data(const std::vector<PatientRecord>& records, const Vocabulary& vocab, Objective objective,
                          std::size_t block_size);

struct LossOptions {
  double lambda = 1.0;
  double w_min = 0.01;
};

/// Loss sum and normaliser of one row; gradients are accumulated into
/// `grad` scaled by `grad_scale` when `grad` is non-null.
template <class S>
std::pair<double, double> row_loss(const ModelParams<S>& p, const ModelConfig& c, const TrainData& data,
                                   std::size_t index, const LossOptions& opt, ModelParams<S>* grad, S grad_scale) {
  ForwardCache<S> cache;
  if (data.objective == Objective::Raven) {
    const PackedRow& row = data.rows[index];
    if (row.seps.empty()) return {0.0, 0.0};
    Mat<S> hidden = forward_hidden(p, c, row.seq, grad ? &cache : nullptr);
    std::vector<int> pos;
    for (const auto& s : row.seps) pos.push_back(s.position);
    Mat<S> z = logits_at(p, hidden, pos);
    Mat<S> y = Mat<S>::Zero(z.rows(), z.cols());
    Mat<S> w = Mat<S>::Ones(z.rows(), z.cols());
    for (std::size_t r = 0; r < row.seps.size(); ++r) {
      const auto& s = row.seps[r];
      for (std::size_t i = 0; i < s.positives.size(); ++i) {
        y(static_cast<Eigen::Index>(r), s.positives[i]) = S(1);
        w(static_cast<Eigen::Index>(r), s.positives[i]) =
            static_cast<S>(recurrence_weight(s.counts[i], opt.lambda, opt.w_min));
      }
    }
    Mat<S> dz;
    const S loss = weighted_bce_with_logits<S>(z, y, w, grad ? &dz : nullptr);
    if (grad) {
      dz *= grad_scale;
      Mat<S> dhidden = Mat<S>::Zero(hidden.rows(), hidden.cols());
      Mat<S> hrows(z.rows(), hidden.cols());
      for (std::size_t r = 0; r < pos.size(); ++r) hrows.row(static_cast<Eigen::Index>(r)) = hidden.row(pos[r]);
      grad->wte.noalias() += dz.transpose() * hrows;
      Mat<S> dh = dz * p.wte;
      for (std::size_t r = 0; r < pos.size(); ++r) dhidden.row(pos[r]) += dh.row(static_cast<Eigen::Index>(r));
      backward(p, c, cache, dhidden, *grad);
    }
    return {static_cast<double>(loss), static_cast<double>(row.seps.size())};
  }
  const TokenSequence& ts = data.seqs[index];
  if (ts.denom == 0.0) return {0.0, 0.0};
  Mat<S> hidden = forward_hidden(p, c, ts.seq, grad ? &cache : nullptr);
  Mat<S> z = hidden * p.wte.transpose();
  Mat<S> dz;
  const S loss = soft_cross_entropy<S>(z, ts.targets, grad ? &dz : nullptr);
  if (grad) {
    dz *= grad_scale;
    grad->wte.noalias() += dz.transpose() * hidden;
    Mat<S> dhidden = dz * p.wte;
    backward(p, c, cache, dhidden, *grad);
  }
  return {static_cast<double>(loss), ts.denom};
}

/// Mean loss over `indices` (total loss / total normaliser); accumulates the
/// gradient of that mean, times `scale`, into `grad` if given.
template <class S>
double batch_loss(const ModelParams<S>& p, const ModelConfig& c, const TrainData& data,
                  const std::vector<std::size_t>& indices, const LossOptions& opt, ModelParams<S>* grad = nullptr,
                  double scale = 1.0) {
  double denom = 0.0;
  for (auto i : indices)
    denom += data.objective == Objective::Raven ? static_cast<double>(data.rows[i].seps.size()) : data.seqs[i].denom;
  if (denom == 0.0) return 0.0;
  double total = 0.0;
  const S gs = static_cast<S>(scale / denom);
  for (auto i : indices) total += row_loss(p, c, data, i, opt, grad, gs).first;
  return total / denom;
}

template <class S>
double evaluate_loss(const ModelParams<S>& p, const ModelConfig& c, const TrainData& data, const LossOptions& opt) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return batch_loss(p, c, data, all, opt);
}

/// Decoupled weight decay Adam. Decay applies to matrices, not norm gains.
template <class S>
class AdamW {
 public:
  AdamW(const ModelParams<S>& like, const TrainConfig& tc)
      : m_(like), v_(like), beta1_(tc.beta1), beta2_(tc.beta2), wd_(tc.weight_decay) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(ModelParams<S>& p, const ModelParams<S>& g, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<Mat<S>*> ps, gs, ms, vs;
    p.for_each([&](const std::string&, Mat<S>& x) { ps.push_back(&x); });
    const_cast<ModelParams<S>&>(g).for_each([&](const std::string&, Mat<S>& x) { gs.push_back(&x); });
    m_.for_each([&](const std::string&, Mat<S>& x) { ms.push_back(&x); });
    v_.for_each([&](const std::string&, Mat<S>& x) { vs.push_back(&x); });
    const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    const S step = static_cast<S>(lr / bc1), rbc2 = static_cast<S>(1.0 / std::sqrt(bc2));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Mat<S>& x = *ps[i];
      const Mat<S>& gr = *gs[i];
      if (x.rows() > 1) x *= static_cast<S>(1.0 - lr * wd_);
      ms[i]->array() = b1 * ms[i]->array() + (S(1) - b1) * gr.array();
      vs[i]->array() = b2 * vs[i]->array() + (S(1) - b2) * gr.array().square();
      x.array() -= step * ms[i]->array() / (vs[i]->array().sqrt() * rbc2 + S(1e-8));
    }
  }

 private:
  ModelParams<S> m_, v_;
  double beta1_, beta2_, wd_;
  long t_ = 0;
};

template <class S>
double global_norm(const ModelParams<S>& g) {
  double sq = 0.0;
  g.for_each([&](const std::string&, const Mat<S>& m) { sq += m.template cast<double>().squaredNorm(); });
  return std::sqrt(sq);
}

struct LogEntry {
  long step = 0;
  int epoch = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss_unweighted = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
};

std::string log_to_csv(const std::vector<LogEntry>& log);

template <class S>
struct TrainResult {
  ModelParams<S> params;  // best-validation parameters
  std::vector<LogEntry> log;
  long steps = 0;
  int epochs = 0;  // epochs started
  double best_val = std::numeric_limits<double>::infinity();
  long best_step = 0;
  bool early_stopped = false;
};

/// AdamW with warmup + cosine schedule and global-norm clipping; validation
/// every `eval_interval` steps and at the end; the best-validation weights are
/// restored. Stops after `patience` evaluations without improvement, at
/// max_iters, or after max_epochs passes over the training rows.
template <class S>
TrainResult<S> fit(const ModelConfig& c, ModelParams<S> params, const TrainData& train, const TrainData& val,
                   const TrainConfig& tc) {
  tc.validate();
  c.validate();
  if (train.size() == 0) throw DataError("fit: empty training set");
  const LossOptions weighted{tc.lambda, tc.w_min};
  const LossOptions unweighted{1.0, tc.w_min};

  TrainResult<S> res;
  res.params = params;
  AdamW<S> opt(params, tc);
  ModelParams<S> grad = ModelParams<S>::zeros(c);

  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size();
  int epoch = 0;
  bool data_exhausted = false;
  auto next_row = [&]() -> std::optional<std::size_t> {
    if (cursor == order.size()) {
      if (epoch >= tc.max_epochs) return std::nullopt;
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng = make_rng(tc.seed, "epoch", static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
      cursor = 0;
      ++epoch;
    }
    return order[cursor++];
  };

  int bad_evals = 0;
  double train_acc = 0.0;
  long train_n = 0;
  auto evaluate = [&](long step, double lr, double gnorm) {
    LogEntry e;
    e.step = step;
    e.epoch = epoch;
    e.lr = lr;
    e.grad_norm = gnorm;
    if (train_n > 0) e.train_loss = train_acc / static_cast<double>(train_n);
    train_acc = 0.0;
    train_n = 0;
    if (val.size() > 0) {
      e.val_loss = evaluate_loss(params, c, val, weighted);
      e.val_loss_unweighted = tc.lambda == 1.0 ? e.val_loss : evaluate_loss(params, c, val, unweighted);
      const double crit = tc.early_stop_weighted ? e.val_loss : e.val_loss_unweighted;
      if (!std::isfinite(crit))
        throw NumericError("non-finite validation loss at step " + std::to_string(step));
      if (crit < res.best_val) {
        res.best_val = crit;
        res.best_step = step;
        res.params = params;
        bad_evals = 0;
      } else {
        ++bad_evals;
      }
    } else {
      res.params = params;
      res.best_step = step;
    }
    spdlog::info("step {} epoch {} lr {:.3g} train {:.5f} val {:.5f} (unweighted {:.5f})", step, epoch, lr,
                 e.train_loss, e.val_loss, e.val_loss_unweighted);
    res.log.push_back(e);
  };

  evaluate(0, tc.lr_at(0), std::numeric_limits<double>::quiet_NaN());
  long it = 0;
  double lr = tc.lr_at(0), gnorm = std::numeric_limits<double>::quiet_NaN();
  while (it < tc.max_iters) {
    grad.set_zero();
    double step_loss = 0.0;
    int micro = 0;
    for (int a = 0; a < tc.grad_accum_steps && !data_exhausted; ++a) {
      std::vector<std::size_t> batch;
      while (static_cast<int>(batch.size()) < tc.batch_size) {
        auto r = next_row();
        if (!r) {
          data_exhausted = true;
          break;
        }
        batch.push_back(*r);
      }
      if (batch.empty()) break;
      step_loss += batch_loss(params, c, train, batch, weighted, &grad, 1.0 / tc.grad_accum_steps);
      ++micro;
    }
    if (micro == 0) break;
    step_loss /= tc.grad_accum_steps;
    lr = tc.lr_at(it);
    gnorm = global_norm(grad);
    if (!std::isfinite(step_loss) || !std::isfinite(gnorm)) {
      throw NumericError("non-finite training loss at step " + std::to_string(it) + " (lr " + std::to_string(lr) +
                         ", grad norm " + std::to_string(gnorm) + ")");
    }
    if (tc.grad_clip > 0.0 && gnorm > tc.grad_clip) {
      const S f = static_cast<S>(tc.grad_clip / (gnorm + 1e-6));
      grad.for_each([&](const std::string&, Mat<S>& m) { m *= f; });
    }
    opt.step(params, grad, lr);
    ++it;
    train_acc += step_loss;
    ++train_n;
    if (it % tc.eval_interval == 0) {
      evaluate(it, lr, gnorm);
      if (val.size() > 0 && bad_evals >= tc.patience) {
        res.early_stopped = true;
        break;
      }
    }
    if (data_exhausted) break;
  }
  if (res.log.back().step != it) evaluate(it, lr, gnorm);
  res.steps = it;
  res.epochs = epoch;
  return res;
}

}  // namespace nextvisit
