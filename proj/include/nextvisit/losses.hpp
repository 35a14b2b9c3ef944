#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "nextvisit/common.hpp"

namespace nextvisit {

/// max(lambda^count, w_min): loss multiplier for a positive target already
/// seen `count` times in the visible history.
inline double recurrence_weight(int count, double lambda, double w_min) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("temporal_decay (lambda) must lie in (0, 1]");
  if (!(w_min >= 0.0 && w_min <= 1.0)) throw ConfigError("w_min must lie in [0, 1]");
  if (count < 0) throw ConfigError("history count must be non-negative");
  return std::max(std::pow(lambda, count), w_min);
}

/// Weight matrix for multi-hot targets: recurrence weights on positives,
/// 1 on negatives.
template <class S>
Mat<S> recurrence_weights(const Mat<S>& targets, const Mat<S>& counts, double lambda, double w_min) {
  Mat<S> w = Mat<S>::Ones(targets.rows(), targets.cols());
  for (Eigen::Index i = 0; i < targets.rows(); ++i)
    for (Eigen::Index k = 0; k < targets.cols(); ++k)
      if (targets(i, k) > S(0.5))
        w(i, k) = static_cast<S>(recurrence_weight(static_cast<int>(counts(i, k)), lambda, w_min));
  return w;
}

namespace detail {

template <class S>
S softplus(S x) {
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class S>
S sigmoid(S x) {
  return x >= 0 ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

}  // namespace detail

/// Sum over rows and vocabulary of w * BCE(sigmoid(z), y), computed from
/// logits. Optionally writes dLoss/dz (unnormalised).
template <class S>
S weighted_bce_with_logits(const Mat<S>& z, const Mat<S>& y, const Mat<S>& w, Mat<S>* dz = nullptr) {
  if (dz) dz->resize(z.rows(), z.cols());
  S total = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      const S zz = z(i, k), yy = y(i, k), ww = w(i, k);
      total += ww * (yy * detail::softplus(-zz) + (S(1) - yy) * detail::softplus(zz));
      if (dz) (*dz)(i, k) = ww * (detail::sigmoid(zz) - yy);
    }
  }
  return total;
}

template <class S>
S bce_with_logits(const Mat<S>& z, const Mat<S>& y, Mat<S>* dz = nullptr) {
  return weighted_bce_with_logits<S>(z, y, Mat<S>::Ones(z.rows(), z.cols()), dz);
}

/// Probability-space form: mean over rows (supervised Seps) of
/// -sum_k w'_k [y log p + (1-y) log(1-p)], p clipped to [eps, 1-eps].
template <class S>
S weighted_bce_loss(const Mat<S>& p, const Mat<S>& y, const Mat<S>& w, S eps = S(1e-7)) {
  if (p.rows() == 0) return S(0);
  S total = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const S pp = std::clamp(p(i, k), eps, S(1) - eps);
      total -= w(i, k) * (y(i, k) * std::log(pp) + (S(1) - y(i, k)) * std::log(S(1) - pp));
    }
  return total / static_cast<S>(p.rows());
}

template <class S>
S bce_loss(const Mat<S>& p, const Mat<S>& y, S eps = S(1e-7)) {
  return weighted_bce_loss<S>(p, y, Mat<S>::Ones(p.rows(), p.cols()), eps);
}

using SoftTargets = std::vector<std::vector<std::pair<TokenId, double>>>;

/// Sum over rows of sum_x w_x * (-log softmax(z)_x). Rows without targets
/// contribute nothing. Optionally writes the unnormalised gradient.
template <class S>
S soft_cross_entropy(const Mat<S>& z, const SoftTargets& targets, Mat<S>* dz = nullptr) {
  if (dz) dz->setZero(z.rows(), z.cols());
  S total = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto& t = targets[static_cast<std::size_t>(i)];
    if (t.empty()) continue;
    const S mx = z.row(i).maxCoeff();
    const S lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    S mass = 0;
    for (const auto& [tok, w] : t) {
      total += static_cast<S>(w) * (lse - z(i, tok));
      mass += static_cast<S>(w);
    }
    if (dz) {
      dz->row(i) = (z.row(i).array() - lse).exp() * mass;
      for (const auto& [tok, w] : t) (*dz)(i, tok) -= static_cast<S>(w);
    }
  }
  return total;
}

/// Mean next-token cross-entropy over positions that have a target.
template <class S>
S multiclass_nt_loss(const Mat<S>& z, const std::vector<TokenId>& next, TokenId ignore = kPadId) {
  SoftTargets t(static_cast<std::size_t>(z.rows()));
  std::size_t n = 0;
  for (std::size_t i = 0; i < next.size(); ++i)
    if (next[i] != ignore) {
      t[i].emplace_back(next[i], 1.0);
      ++n;
    }
  return n == 0 ? S(0) : soft_cross_entropy<S>(z, t) / static_cast<S>(n);
}

/// Set-loss: at each step the target is uniform over the still-unseen
/// tokens U_t; steps with empty U_t are skipped. Summed over steps and
/// divided by `n_visits`.
template <class S>
S seqloss_nt_loss(const Mat<S>& z, const std::vector<std::vector<TokenId>>& remaining, std::size_t n_visits) {
  SoftTargets t(static_cast<std::size_t>(z.rows()));
  for (std::size_t i = 0; i < remaining.size(); ++i)
    for (auto tok : remaining[i]) t[i].emplace_back(tok, 1.0 / static_cast<double>(remaining[i].size()));
  return n_visits == 0 ? S(0) : soft_cross_entropy<S>(z, t) / static_cast<S>(n_visits);
}

}  // namespace nextvisit
