#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nextvisit/common.hpp"
#include "nextvisit/sequence.hpp"

namespace nextvisit {

struct ModelConfig {
  int n_layer = 2;
  int n_head = 2;
  int n_embd = 64;
  int vocab_size = 0;
  int block_size = 256;
  double rope_base = 10000.0;
  double rope_time_unit = 1.0;  // days per rotary position unit
  bool bias = false;
  double dropout = 0.0;

  int head_dim() const { return n_embd / n_head; }
  void validate() const;
  /// Token embeddings (shared with the output head), attention, MLP and norm
  /// weights. The rank projection is reported separately.
  std::size_t param_count() const;
  std::size_t rank_param_count() const { return static_cast<std::size_t>(n_embd) * n_embd; }
};

inline void ModelConfig::validate() const {
  if (n_layer < 1 || n_head < 1 || n_embd < 2) throw ConfigError("model: n_layer, n_head, n_embd must be positive");
  if (n_embd % n_head != 0) throw ConfigError("model: n_embd must be divisible by n_head");
  if (head_dim() % 2 != 0) throw ConfigError("model: head dimension must be even for rotary pairing");
  if (vocab_size < 2) throw ConfigError("model: vocab_size must include the reserved tokens");
  if (block_size < 2) throw ConfigError("model: block_size must be >= 2");
  if (!(rope_base > 1.0) || !(rope_time_unit > 0.0)) throw ConfigError("model: rope_base > 1 and rope_time_unit > 0");
  if (bias) throw ConfigError("model: bias terms are not supported (bias = false)");
  if (dropout != 0.0) throw ConfigError("model: dropout is not supported (dropout = 0)");
}

inline std::size_t ModelConfig::param_count() const {
  const std::size_t d = static_cast<std::size_t>(n_embd);
  const std::size_t per_layer = 12 * d * d + 2 * d;
  return static_cast<std::size_t>(vocab_size) * d + static_cast<std::size_t>(n_layer) * per_layer + d;
}

template <class S>
struct LayerParams {
  Mat<S> ln1, w_qkv, w_o, ln2, w_fc, w_proj;
};

/// Weights of the pre-norm decoder. The output head is tied to `wte`.
template <class S>
struct ModelParams {
  Mat<S> wte;     // V x d
  Mat<S> w_rank;  // d x d, applied to the fixed sinusoidal rank code
  std::vector<LayerParams<S>> layers;
  Mat<S> ln_f;    // 1 x d

  template <class F>
  void for_each(F&& f) {
    f(std::string("wte"), wte);
    f(std::string("w_rank"), w_rank);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "h." + std::to_string(l) + ".";
      auto& L = layers[l];
      f(p + "ln1", L.ln1);
      f(p + "w_qkv", L.w_qkv);
      f(p + "w_o", L.w_o);
      f(p + "ln2", L.ln2);
      f(p + "w_fc", L.w_fc);
      f(p + "w_proj", L.w_proj);
    }
    f(std::string("ln_f"), ln_f);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each([&](const std::string& n, Mat<S>& m) { f(n, static_cast<const Mat<S>&>(m)); });
  }

  static ModelParams zeros(const ModelConfig& c) {
    const int d = c.n_embd;
    ModelParams p;
    p.wte = Mat<S>::Zero(c.vocab_size, d);
    p.w_rank = Mat<S>::Zero(d, d);
    p.layers.resize(static_cast<std::size_t>(c.n_layer));
    for (auto& L : p.layers) {
      L.ln1 = Mat<S>::Zero(1, d);
      L.w_qkv = Mat<S>::Zero(d, 3 * d);
      L.w_o = Mat<S>::Zero(d, d);
      L.ln2 = Mat<S>::Zero(1, d);
      L.w_fc = Mat<S>::Zero(d, 4 * d);
      L.w_proj = Mat<S>::Zero(4 * d, d);
    }
    p.ln_f = Mat<S>::Zero(1, d);
    return p;
  }

  template <class T>
  ModelParams<T> cast() const {
    ModelParams<T> out;
    out.wte = wte.template cast<T>();
    out.w_rank = w_rank.template cast<T>();
    for (const auto& L : layers)
      out.layers.push_back({L.ln1.template cast<T>(), L.w_qkv.template cast<T>(), L.w_o.template cast<T>(),
                            L.ln2.template cast<T>(), L.w_fc.template cast<T>(), L.w_proj.template cast<T>()});
    out.ln_f = ln_f.template cast<T>();
    return out;
  }

  void set_zero() {
    for_each([](const std::string&, Mat<S>& m) { m.setZero(); });
  }
  std::size_t size() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Mat<S>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }
};

/// Normal(0, 0.02) weights, residual projections scaled by 1/sqrt(2 n_layer),
/// unit norm gains. Drawn in double so float and double models agree.
template <class S>
ModelParams<S> init_params(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  auto p = ModelParams<double>::zeros(c);
  Rng rng = make_rng(seed, "init");
  auto fill = [&](Mat<double>& m, double std) {
    for (Eigen::Index i = 0; i < m.size(); i += 2) {
      const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
      const double r = std::sqrt(-2.0 * std::log(u1));
      m.data()[i] = std * r * std::cos(2.0 * M_PI * u2);
      if (i + 1 < m.size()) m.data()[i + 1] = std * r * std::sin(2.0 * M_PI * u2);
    }
  };
  const double resid = 0.02 / std::sqrt(2.0 * c.n_layer);
  fill(p.wte, 0.02);
  fill(p.w_rank, 0.02);
  for (auto& L : p.layers) {
    L.ln1.setOnes();
    L.ln2.setOnes();
    fill(L.w_qkv, 0.02);
    fill(L.w_o, resid);
    fill(L.w_fc, 0.02);
    fill(L.w_proj, resid);
  }
  p.ln_f.setOnes();
  return p.template cast<S>();
}

// ---------------------------------------------------------------------------
// Positional pieces

/// Fixed sinusoidal code of a window rank: [sin(r w_0), cos(r w_0), ...],
/// w_m = 10000^(-2m/d).
template <class S>
RowVec<S> rank_code(int rank, int d) {
  RowVec<S> out(d);
  for (int m = 0; 2 * m < d; ++m) {
    const double w = std::pow(10000.0, -2.0 * m / d);
    out(2 * m) = static_cast<S>(std::sin(rank * w));
    if (2 * m + 1 < d) out(2 * m + 1) = static_cast<S>(std::cos(rank * w));
  }
  return out;
}

template <class S>
RowVec<S> rank_embedding(int rank, const ModelParams<S>& p) {
  return rank_code<S>(rank, static_cast<int>(p.w_rank.rows())) * p.w_rank;
}

/// Rotation tables for rotary pairs (2m, 2m+1): angle = pos * base^(-2m/hd),
/// pos = day / time_unit.
template <class S>
struct RotaryTable {
  Mat<S> cos, sin;  // T x hd/2

  RotaryTable() = default;
  RotaryTable(const std::vector<double>& day, int hd, double base, double time_unit)
      : cos(static_cast<Eigen::Index>(day.size()), hd / 2), sin(static_cast<Eigen::Index>(day.size()), hd / 2) {
    for (std::size_t i = 0; i < day.size(); ++i) {
      const double pos = day[i] / time_unit;
      for (int m = 0; m < hd / 2; ++m) {
        const double a = pos * std::pow(base, -2.0 * m / hd);
        cos(static_cast<Eigen::Index>(i), m) = static_cast<S>(std::cos(a));
        sin(static_cast<Eigen::Index>(i), m) = static_cast<S>(std::sin(a));
      }
    }
  }

  /// Rotates each row of `x` (T x hd); `inverse` applies the transpose.
  template <class Derived>
  void apply(Eigen::MatrixBase<Derived>& x, bool inverse = false) const {
    const S sign = inverse ? S(-1) : S(1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index m = 0; m < cos.cols(); ++m) {
        const S c = cos(i, m), s = sign * sin(i, m);
        const S a = x(i, 2 * m), b = x(i, 2 * m + 1);
        x(i, 2 * m) = a * c - b * s;
        x(i, 2 * m + 1) = a * s + b * c;
      }
    }
  }
};

/// Rotates q and k (T x hd each, one head) in place.
template <class S>
void apply_rotary(Mat<S>& q, Mat<S>& k, const std::vector<double>& day_pos, double rope_base, double rope_time_unit) {
  RotaryTable<S> rt(day_pos, static_cast<int>(q.cols()), rope_base, rope_time_unit);
  rt.apply(q);
  rt.apply(k);
}

/// Attention mask in storage order: i attends j iff neither is Pad and
/// (rank_j, visit_j) <= (rank_i, visit_i).
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> build_visit_mask(const FlatSequence& s) {
  const auto T = static_cast<Eigen::Index>(s.size());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(T, T);
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index j = 0; j < T; ++j) {
      const bool pad = s.tokens[i] == kPadId || s.tokens[j] == kPadId;
      const bool before = s.rank[j] < s.rank[i] || (s.rank[j] == s.rank[i] && s.visit[j] <= s.visit[i]);
      m(i, j) = !pad && before;
    }
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

inline constexpr double kLnEps = 1e-5;

template <class S>
void layer_norm(const Mat<S>& x, const Mat<S>& g, Mat<S>& xhat, Vec<S>& rstd, Mat<S>& y) {
  const auto d = static_cast<S>(x.cols());
  Vec<S> mean = x.rowwise().sum() / d;
  xhat = x.colwise() - mean;
  Vec<S> var = xhat.array().square().rowwise().sum() / d;
  rstd = (var.array() + S(kLnEps)).rsqrt();
  xhat.array().colwise() *= rstd.array();
  y = xhat.array().rowwise() * g.row(0).array();
}

template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat, const Vec<S>& rstd, const Mat<S>& g, Mat<S>& dg) {
  dg += (dy.array() * xhat.array()).colwise().sum().matrix();
  Mat<S> dxhat = dy.array().rowwise() * g.row(0).array();
  const auto d = static_cast<S>(dy.cols());
  Vec<S> m1 = dxhat.rowwise().sum() / d;
  Vec<S> m2 = (dxhat.array() * xhat.array()).rowwise().sum() / d;
  Mat<S> dx = dxhat.colwise() - m1;
  dx -= (xhat.array().colwise() * m2.array()).matrix();
  dx.array().colwise() *= rstd.array();
  return dx;
}

template <class S>
S gelu(S u) {
  const S c = static_cast<S>(0.7978845608028654);
  return S(0.5) * u * (S(1) + std::tanh(c * (u + S(0.044715) * u * u * u)));
}

template <class S>
S gelu_grad(S u) {
  const S c = static_cast<S>(0.7978845608028654);
  const S t = std::tanh(c * (u + S(0.044715) * u * u * u));
  return S(0.5) * (S(1) + t) + S(0.5) * u * (S(1) - t * t) * c * (S(1) + S(3 * 0.044715) * u * u);
}

}  // namespace detail

template <class S>
struct LayerCache {
  Mat<S> x_in, xhat1, h1, qkv, att, x_mid, xhat2, h2, u, g;
  Vec<S> rstd1, rstd2;
  std::vector<Mat<S>> P;  // per head, T x T
};

/// Activations kept for backward. Everything is stored in canonical order:
/// positions stably sorted by (rank, visit, token), so the storage order of a
/// visit's tokens cannot influence any arithmetic.
template <class S>
struct ForwardCache {
  std::vector<Eigen::Index> order;     // canonical -> storage position
  std::vector<TokenId> tokens;         // canonical order
  std::vector<Eigen::Index> key_end;   // keys [0, key_end) are visible
  Mat<S> codes;                        // rank codes, T x d
  RotaryTable<S> rope;
  std::vector<LayerCache<S>> layers;
  Mat<S> xhat_f, hf;
  Vec<S> rstd_f;
};

/// Final hidden states (after the last norm), T x d in storage order; pad
/// rows are zero.
template <class S>
Mat<S> forward_hidden(const ModelParams<S>& p, const ModelConfig& c, const FlatSequence& seq,
                      ForwardCache<S>* cache_out = nullptr) {
  const auto T = static_cast<Eigen::Index>(seq.size());
  const int d = c.n_embd, H = c.n_head, hd = c.head_dim();
  if (T == 0) return Mat<S>(0, d);
  if (T > c.block_size) throw ConfigError("forward: sequence of " + std::to_string(T) + " exceeds block_size");
  if (seq.visit.size() != seq.size() || seq.day.size() != seq.size() || seq.rank.size() != seq.size())
    throw ConfigError("forward: ragged sequence arrays");

  ForwardCache<S> local;
  ForwardCache<S>& fc = cache_out ? *cache_out : local;
  fc.order.resize(static_cast<std::size_t>(T));
  std::iota(fc.order.begin(), fc.order.end(), Eigen::Index{0});
  std::stable_sort(fc.order.begin(), fc.order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (seq.rank[a] != seq.rank[b]) return seq.rank[a] < seq.rank[b];
    if (seq.visit[a] != seq.visit[b]) return seq.visit[a] < seq.visit[b];
    return seq.tokens[a] < seq.tokens[b];
  });

  fc.tokens.resize(static_cast<std::size_t>(T));
  fc.key_end.resize(static_cast<std::size_t>(T));
  std::vector<double> day(static_cast<std::size_t>(T));
  fc.codes.resize(T, d);
  Mat<S> x(T, d);
  for (Eigen::Index i = 0; i < T; ++i) {
    const auto src = fc.order[static_cast<std::size_t>(i)];
    const TokenId tok = seq.tokens[src];
    if (tok < 0 || tok >= c.vocab_size) throw ConfigError("forward: token id out of range");
    fc.tokens[i] = tok;
    day[i] = seq.day[src];
    fc.codes.row(i) = rank_code<S>(seq.rank[src], d);
    x.row(i) = p.wte.row(tok);
  }
  for (Eigen::Index i = T; i-- > 0;) {
    const auto a = fc.order[i];
    const bool last = i + 1 == T;
    const bool same = !last && seq.rank[fc.order[i + 1]] == seq.rank[a] && seq.visit[fc.order[i + 1]] == seq.visit[a];
    fc.key_end[i] = same ? fc.key_end[i + 1] : i + 1;
  }
  x.noalias() += fc.codes * p.w_rank;
  fc.rope = RotaryTable<S>(day, hd, c.rope_base, c.rope_time_unit);
  fc.layers.resize(static_cast<std::size_t>(c.n_layer));
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));

  for (int l = 0; l < c.n_layer; ++l) {
    const auto& L = p.layers[l];
    auto& lc = fc.layers[l];
    lc.x_in = x;
    detail::layer_norm(x, L.ln1, lc.xhat1, lc.rstd1, lc.h1);
    lc.qkv.noalias() = lc.h1 * L.w_qkv;
    lc.att.setZero(T, d);
    lc.P.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
      auto q = lc.qkv.middleCols(h * hd, hd);
      auto k = lc.qkv.middleCols(d + h * hd, hd);
      auto v = lc.qkv.middleCols(2 * d + h * hd, hd);
      fc.rope.apply(q);
      fc.rope.apply(k);
      Mat<S>& P = lc.P[h];
      P.noalias() = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < T; ++i) {
        const Eigen::Index end = fc.tokens[i] == kPadId ? 0 : fc.key_end[i];
        S mx = -std::numeric_limits<S>::infinity();
        for (Eigen::Index j = 0; j < end; ++j)
          if (fc.tokens[j] != kPadId) mx = std::max(mx, P(i, j));
        S sum = 0;
        for (Eigen::Index j = 0; j < T; ++j) {
          if (j < end && fc.tokens[j] != kPadId) {
            P(i, j) = std::exp(P(i, j) - mx);
            sum += P(i, j);
          } else {
            P(i, j) = 0;
          }
        }
        if (sum > 0) P.row(i) /= sum;
      }
      lc.att.middleCols(h * hd, hd).noalias() = P * v;
    }
    lc.x_mid = lc.x_in;
    lc.x_mid.noalias() += lc.att * L.w_o;
    detail::layer_norm(lc.x_mid, L.ln2, lc.xhat2, lc.rstd2, lc.h2);
    lc.u.noalias() = lc.h2 * L.w_fc;
    lc.g = lc.u.unaryExpr([](S v) { return detail::gelu(v); });
    x = lc.x_mid;
    x.noalias() += lc.g * L.w_proj;
  }
  detail::layer_norm(x, p.ln_f, fc.xhat_f, fc.rstd_f, fc.hf);

  Mat<S> out(T, d);
  for (Eigen::Index i = 0; i < T; ++i) {
    if (fc.tokens[i] == kPadId) out.row(fc.order[i]).setZero();
    else out.row(fc.order[i]) = fc.hf.row(i);
  }
  return out;
}

/// Logits for selected storage rows (tied head): hidden.row(r) * wte^T.
template <class S>
Mat<S> logits_at(const ModelParams<S>& p, const Mat<S>& hidden, const std::vector<int>& rows) {
  Mat<S> h(static_cast<Eigen::Index>(rows.size()), hidden.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) h.row(static_cast<Eigen::Index>(i)) = hidden.row(rows[i]);
  return h * p.wte.transpose();
}

/// Logits at every position, T x V.
template <class S>
Mat<S> forward(const ModelParams<S>& p, const ModelConfig& c, const FlatSequence& seq) {
  return forward_hidden(p, c, seq) * p.wte.transpose();
}

/// Accumulates parameter gradients given dL/d(hidden) in storage order.
template <class S>
void backward(const ModelParams<S>& p, const ModelConfig& c, const ForwardCache<S>& fc, const Mat<S>& d_hidden_storage,
              ModelParams<S>& grad) {
  const auto T = static_cast<Eigen::Index>(fc.order.size());
  if (T == 0) return;
  const int d = c.n_embd, H = c.n_head, hd = c.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));

  Mat<S> dh(T, d);
  for (Eigen::Index i = 0; i < T; ++i) {
    if (fc.tokens[i] == kPadId) dh.row(i).setZero();
    else dh.row(i) = d_hidden_storage.row(fc.order[i]);
  }
  Mat<S> dx = detail::layer_norm_backward(dh, fc.xhat_f, fc.rstd_f, p.ln_f, grad.ln_f);

  for (int l = c.n_layer; l-- > 0;) {
    const auto& L = p.layers[l];
    auto& G = grad.layers[l];
    const auto& lc = fc.layers[l];

    // MLP branch
    G.w_proj.noalias() += lc.g.transpose() * dx;
    Mat<S> du = dx * L.w_proj.transpose();
    du.array() *= lc.u.unaryExpr([](S v) { return detail::gelu_grad(v); }).array();
    G.w_fc.noalias() += lc.h2.transpose() * du;
    Mat<S> dh2 = du * L.w_fc.transpose();
    dx += detail::layer_norm_backward(dh2, lc.xhat2, lc.rstd2, L.ln2, G.ln2);

    // attention branch
    G.w_o.noalias() += lc.att.transpose() * dx;
    Mat<S> datt = dx * L.w_o.transpose();
    Mat<S> dqkv(T, 3 * d);
    for (int h = 0; h < H; ++h) {
      const Mat<S>& P = lc.P[h];
      auto q = lc.qkv.middleCols(h * hd, hd);
      auto k = lc.qkv.middleCols(d + h * hd, hd);
      auto v = lc.qkv.middleCols(2 * d + h * hd, hd);
      auto dO = datt.middleCols(h * hd, hd);
      Mat<S> dP = dO * v.transpose();
      dqkv.middleCols(2 * d + h * hd, hd).noalias() = P.transpose() * dO;
      Vec<S> rs = (dP.array() * P.array()).rowwise().sum();
      Mat<S> dS = (P.array() * (dP.array().colwise() - rs.array())).matrix() * scale;
      Mat<S> dq = dS * k;
      Mat<S> dk = dS.transpose() * q;
      fc.rope.apply(dq, true);
      fc.rope.apply(dk, true);
      dqkv.middleCols(h * hd, hd) = dq;
      dqkv.middleCols(d + h * hd, hd) = dk;
    }
    G.w_qkv.noalias() += lc.h1.transpose() * dqkv;
    Mat<S> dh1 = dqkv * L.w_qkv.transpose();
    dx += detail::layer_norm_backward(dh1, lc.xhat1, lc.rstd1, L.ln1, G.ln1);
  }

  grad.w_rank.noalias() += fc.codes.transpose() * dx;
  for (Eigen::Index i = 0; i < T; ++i) grad.wte.row(fc.tokens[i]) += dx.row(i);
}

// ---------------------------------------------------------------------------
// Incremental decoding for token-causal sequences

/// Key/value cache decoder: each appended token attends to every earlier
/// token and itself, as in `forward` with visit = position, rank 0.
template <class S>
class IncrementalDecoder {
 public:
  IncrementalDecoder(const ModelParams<S>& p, const ModelConfig& c, int capacity)
      : p_(&p), c_(c), rank0_(rank_embedding<S>(0, p)) {
    keys_.assign(static_cast<std::size_t>(c.n_layer), Mat<S>(capacity, c.n_embd));
    values_ = keys_;
  }

  int size() const { return n_; }
  int capacity() const { return static_cast<int>(keys_.empty() ? 0 : keys_[0].rows()); }

  /// Appends a token at rotary position `pos` and returns next-token logits.
  RowVec<S> step(TokenId tok, double pos) {
    if (n_ >= capacity()) grow();
    const int d = c_.n_embd, H = c_.n_head, hd = c_.head_dim();
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    RotaryTable<S> rope(std::vector<double>{pos}, hd, c_.rope_base, c_.rope_time_unit);
    Mat<S> x = p_->wte.row(tok) + rank0_;
    Mat<S> xhat, h, qkv, att(1, d);
    Vec<S> rstd;
    for (int l = 0; l < c_.n_layer; ++l) {
      const auto& L = p_->layers[l];
      detail::layer_norm(x, L.ln1, xhat, rstd, h);
      qkv.noalias() = h * L.w_qkv;
      for (int hh = 0; hh < H; ++hh) {
        auto q = qkv.middleCols(hh * hd, hd);
        auto k = qkv.middleCols(d + hh * hd, hd);
        rope.apply(q);
        rope.apply(k);
      }
      keys_[l].row(n_) = qkv.middleCols(d, d);
      values_[l].row(n_) = qkv.middleCols(2 * d, d);
      for (int hh = 0; hh < H; ++hh) {
        auto K = keys_[l].block(0, hh * hd, n_ + 1, hd);
        auto V = values_[l].block(0, hh * hd, n_ + 1, hd);
        RowVec<S> s = (qkv.middleCols(hh * hd, hd) * K.transpose()) * scale;
        s = (s.array() - s.maxCoeff()).exp();
        s /= s.sum();
        att.middleCols(hh * hd, hd).noalias() = s * V;
      }
      x.noalias() += att * L.w_o;
      detail::layer_norm(x, L.ln2, xhat, rstd, h);
      Mat<S> u = h * L.w_fc;
      x.noalias() += u.unaryExpr([](S v) { return detail::gelu(v); }) * L.w_proj;
    }
    detail::layer_norm(x, p_->ln_f, xhat, rstd, h);
    ++n_;
    return h * p_->wte.transpose();
  }

 private:
  void grow() {
    const auto cap = std::max<Eigen::Index>(16, 2 * capacity());
    for (auto* v : {&keys_, &values_})
      for (auto& m : *v) m.conservativeResize(cap, Eigen::NoChange);
  }

  const ModelParams<S>* p_;
  ModelConfig c_;
  RowVec<S> rank0_;
  std::vector<Mat<S>> keys_, values_;
  int n_ = 0;
};

}  // namespace nextvisit
