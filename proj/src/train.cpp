#include "nextvisit/train.hpp"

#include "nextvisit/io.hpp"

namespace nextvisit {

TrainConfig TrainConfig::full_scale() {
  TrainConfig t;
  t.lambda = 0.5;
  t.learning_rate = 0.00022;
  t.min_lr = 0.000022;
  t.decay_lr = true;
  t.warmup_iters = 20000;
  t.lr_decay_iters = 800000;
  t.max_iters = 810000;
  t.batch_size = 16;
  t.grad_accum_steps = 8;
  t.grad_clip = 1.0;
  t.weight_decay = 0.01;
  t.beta1 = 0.9;
  t.beta2 = 0.95;
  return t;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) { return from_config(kv, TrainConfig{}); }

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv, TrainConfig t) {
  t.lambda = kv.get_double("temporal_decay", kv.get_double("lambda", t.lambda));
  t.w_min = kv.get_double("w_min", t.w_min);
  t.learning_rate = kv.get_double("learning_rate", t.learning_rate);
  t.min_lr = kv.get_double("min_lr", t.min_lr);
  t.decay_lr = kv.get_bool("decay_lr", t.decay_lr);
  t.warmup_iters = kv.get_int("warmup_iters", t.warmup_iters);
  t.lr_decay_iters = kv.get_int("lr_decay_iters", t.lr_decay_iters);
  t.max_iters = kv.get_int("max_iters", t.max_iters);
  t.batch_size = static_cast<int>(kv.get_int("batch_size", t.batch_size));
  t.grad_accum_steps = static_cast<int>(kv.get_int("gradient_accumulation_steps", kv.get_int("grad_accum_steps", t.grad_accum_steps)));
  t.grad_clip = kv.get_double("grad_clip", t.grad_clip);
  t.weight_decay = kv.get_double("weight_decay", t.weight_decay);
  t.beta1 = kv.get_double("beta1", t.beta1);
  t.beta2 = kv.get_double("beta2", t.beta2);
  if (auto b = kv.get_double_list("betas")) {
    if (b->size() != 2) throw ConfigError("betas must hold two values");
    t.beta1 = (*b)[0];
    t.beta2 = (*b)[1];
  }
  t.max_epochs = static_cast<int>(kv.get_int("max_epochs", t.max_epochs));
  t.patience = static_cast<int>(kv.get_int("patience", t.patience));
  t.eval_interval = kv.get_int("eval_interval", t.eval_interval);
  t.early_stop_weighted = kv.get_string("early_stop_on", t.early_stop_weighted ? "weighted" : "unweighted") != "unweighted";
  t.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(t.seed)));
  if (auto opt = kv.get_string("optimizer"); opt && *opt != "AdamW" && *opt != "adamw")
    throw ConfigError("optimizer '" + *opt + "' is not supported (AdamW)");
  t.validate();
  return t;
}

void TrainConfig::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("temporal_decay must lie in (0, 1]");
  if (!(w_min >= 0.0 && w_min <= 1.0)) throw ConfigError("w_min must lie in [0, 1]");
  if (learning_rate < 0.0 || min_lr < 0.0) throw ConfigError("learning rates must be non-negative");
  if (warmup_iters < 0 || warmup_iters > lr_decay_iters || lr_decay_iters > max_iters)
    throw ConfigError("need 0 <= warmup_iters <= lr_decay_iters <= max_iters");
  if (batch_size < 1 || grad_accum_steps < 1) throw ConfigError("batch_size and gradient_accumulation_steps must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (weight_decay < 0.0 || grad_clip < 0.0) throw ConfigError("weight_decay and grad_clip must be non-negative");
  if (max_epochs < 1 || patience < 1 || eval_interval < 1) throw ConfigError("max_epochs, patience, eval_interval must be >= 1");
}

double TrainConfig::lr_at(long it) const {
  if (!decay_lr) return learning_rate;
  if (it < warmup_iters) return learning_rate * static_cast<double>(it + 1) / static_cast<double>(warmup_iters + 1);
  if (it >= lr_decay_iters) return it == warmup_iters ? learning_rate : min_lr;
  const double ratio = static_cast<double>(it - warmup_iters) / static_cast<double>(lr_decay_iters - warmup_iters);
  const double coeff = 0.5 * (1.0 + std::cos(M_PI * ratio));
  return min_lr + coeff * (learning_rate - min_lr);
}

ModelConfig model_config_from(const KeyValueConfig& kv, ModelConfig m) {
  m.n_layer = static_cast<int>(kv.get_int("n_layer", m.n_layer));
  m.n_head = static_cast<int>(kv.get_int("n_head", m.n_head));
  m.n_embd = static_cast<int>(kv.get_int("n_embd", m.n_embd));
  m.block_size = static_cast<int>(kv.get_int("block_size", m.block_size));
  m.rope_base = kv.get_double("rope_base", m.rope_base);
  m.rope_time_unit = kv.get_double("rope_time_unit", m.rope_time_unit);
  m.bias = kv.get_bool("bias", m.bias);
  m.dropout = kv.get_double("dropout", m.dropout);
  if (kv.has("rotary") && !kv.get_bool("rotary", true)) throw ConfigError("rotary = false is not supported");
  return m;
}

TrainData make_train_data(const std::vector<PatientRecord>& records, const Vocabulary& vocab, Objective objective,
                          std::size_t block_size) {
  TrainData d;
  d.objective = objective;
  if (objective == Objective::Raven) {
    std::vector<TrainWindow> windows;
    for (const auto& r : records) {
      auto w = make_train_windows(r, block_size);
      windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    d.rows = pack_windows(windows, block_size);
  } else {
    for (const auto& r : records) {
      auto s = make_baseline_sequences(r, vocab, objective, block_size);
      d.seqs.insert(d.seqs.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
  }
  return d;
}

std::string log_to_csv(const std::vector<LogEntry>& log) {
  std::string out = "step,epoch,train_loss,val_loss,val_loss_unweighted,lr,grad_norm\n";
  for (const auto& e : log) {
    out += std::to_string(e.step) + "," + std::to_string(e.epoch) + "," + format_number(e.train_loss) + "," +
           format_number(e.val_loss) + "," + format_number(e.val_loss_unweighted) + "," + format_number(e.lr) + "," +
           format_number(e.grad_norm) + "\n";
  }
  return out;
}

}  // namespace nextvisit
