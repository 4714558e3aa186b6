#include "rondo/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "rondo/nn/network.hpp"

namespace rondo::nn {

LossTerms& LossTerms::operator+=(const LossTerms& o) {
  pos += o.pos;
  vel += o.vel;
  cls += o.cls;
  reg += o.reg;
  total += o.total;
  return *this;
}

LossTerms LossTerms::scaled(double s) const { return {pos * s, vel * s, cls * s, reg * s, total * s}; }

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

// With q the probability of the true class: -alpha_t (1 - q)^gamma log q.
// For a negative anchor the roles of z and -z swap.
double focal_loss(double logit, bool positive, double alpha, double gamma) {
  const double z = positive ? logit : -logit;
  const double a = positive ? alpha : 1.0 - alpha;
  const double q = sigmoid(z);
  return a * std::pow(1.0 - q, gamma) * softplus(-z);
}

double focal_loss_grad(double logit, bool positive, double alpha, double gamma) {
  const double z = positive ? logit : -logit;
  const double a = positive ? alpha : 1.0 - alpha;
  const double q = sigmoid(z);
  const double log_q = -softplus(-z);
  // d/dz of a (1-q)^g (-log q)
  const double g = a * std::pow(1.0 - q, gamma) * (gamma * q * log_q - (1.0 - q));
  return positive ? g : -g;
}

template <typename T>
LossTerms compute_loss(int batch, int grid, const T* wp_pred, const T* anchor_pred, const T* wp_label,
                       const T* anchor_label, const LossConfig& cfg, T* d_wp, T* d_anchor) {
  LossTerms L;
  const int cells = grid * grid;
  const double n_wp = static_cast<double>(batch) * kWaypointOutputs;
  const double n_cells = static_cast<double>(batch) * cells;
  if (d_wp) std::fill(d_wp, d_wp + batch * kWaypointOutputs, T(0));
  if (d_anchor) std::fill(d_anchor, d_anchor + static_cast<std::size_t>(batch) * kAnchorOutputs * cells, T(0));

  int positives = 0;
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < cells; ++c)
      if (anchor_label[(static_cast<std::size_t>(b) * cells + c) * kAnchorOutputs] > T(0.5)) ++positives;
  const double n_reg = 4.0 * positives;

  for (int b = 0; b < batch; ++b) {
    const T* p = wp_pred + b * kWaypointOutputs;
    const T* y = wp_label + b * kWaypointOutputs;
    T* dp = d_wp ? d_wp + b * kWaypointOutputs : nullptr;
    for (int i = 0; i < kWaypointOutputs; ++i) {
      const double e = static_cast<double>(p[i]) - static_cast<double>(y[i]);
      const double ae = std::abs(e);
      L.pos += ae <= cfg.huber_delta ? 0.5 * e * e : cfg.huber_delta * (ae - 0.5 * cfg.huber_delta);
      if (dp) {
        const double g = ae <= cfg.huber_delta ? e : cfg.huber_delta * (e > 0.0 ? 1.0 : -1.0);
        dp[i] += static_cast<T>(cfg.lambda_pos * g / n_wp);
      }
    }
    // successive differences, starting from the origin
    for (int i = 0; i < kWaypointOutputs; ++i) {
      const double prev_p = i >= 2 ? static_cast<double>(p[i - 2]) : 0.0;
      const double prev_y = i >= 2 ? static_cast<double>(y[i - 2]) : 0.0;
      const double e = (static_cast<double>(p[i]) - prev_p) - (static_cast<double>(y[i]) - prev_y);
      L.vel += e * e;
      if (dp) {
        const double g = cfg.lambda_vel * 2.0 * e / n_wp;
        dp[i] += static_cast<T>(g);
        if (i >= 2) dp[i - 2] -= static_cast<T>(g);
      }
    }
    for (int c = 0; c < cells; ++c) {
      const T* lab = anchor_label + (static_cast<std::size_t>(b) * cells + c) * kAnchorOutputs;
      const bool pos = lab[0] > T(0.5);
      const double z = static_cast<double>(anchor_pred[(static_cast<std::size_t>(b) * kAnchorOutputs) * cells + c]);
      L.cls += focal_loss(z, pos, cfg.focal_alpha, cfg.focal_gamma);
      if (d_anchor)
        d_anchor[(static_cast<std::size_t>(b) * kAnchorOutputs) * cells + c] =
            static_cast<T>(cfg.lambda_class * focal_loss_grad(z, pos, cfg.focal_alpha, cfg.focal_gamma) / n_cells);
      if (!pos) continue;
      for (int f = 1; f < kAnchorOutputs; ++f) {
        const std::size_t idx = (static_cast<std::size_t>(b) * kAnchorOutputs + f) * cells + c;
        const double e = static_cast<double>(anchor_pred[idx]) - static_cast<double>(lab[f]);
        L.reg += std::abs(e);
        if (d_anchor) d_anchor[idx] = static_cast<T>(cfg.lambda_reg * (e > 0.0 ? 1.0 : e < 0.0 ? -1.0 : 0.0) / n_reg);
      }
    }
  }
  L.pos /= n_wp;
  L.vel /= n_wp;
  L.cls /= n_cells;
  L.reg = positives > 0 ? L.reg / n_reg : 0.0;
  L.total = cfg.lambda_pos * L.pos + cfg.lambda_vel * L.vel + cfg.lambda_class * L.cls + cfg.lambda_reg * L.reg;
  return L;
}

template LossTerms compute_loss<float>(int, int, const float*, const float*, const float*, const float*,
                                       const LossConfig&, float*, float*);
template LossTerms compute_loss<double>(int, int, const double*, const double*, const double*, const double*,
                                        const LossConfig&, double*, double*);

}  // namespace rondo::nn
