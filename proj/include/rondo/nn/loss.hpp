#pragma once

#include <vector>

namespace rondo::nn {

struct LossConfig {
  double lambda_pos = 0.5;
  double lambda_vel = 1.0;
  double lambda_class = 10.0;
  double lambda_reg = 0.2;
  double focal_alpha = 0.5;
  double focal_gamma = 2.0;
  double huber_delta = 1.0;  // m

  bool operator==(const LossConfig&) const = default;
};

struct LossTerms {
  double pos = 0.0;    // Huber on waypoints
  double vel = 0.0;    // L2 on successive differences
  double cls = 0.0;    // focal loss on anchor existence
  double reg = 0.0;    // L1 on offsets and orientation of occupied anchors
  double total = 0.0;  // weighted sum

  LossTerms& operator+=(const LossTerms& o);
  LossTerms scaled(double s) const;
};

double focal_loss(double logit, bool positive, double alpha, double gamma);
double focal_loss_grad(double logit, bool positive, double alpha, double gamma);

/// Loss of a batch and its gradients w.r.t. the raw outputs.
/// wp_pred [B][30]; anchor_pred [B][5][S][S] (channel 0 is the existence logit);
/// wp_label [B][30]; anchor_label [B][S][S][5]. Gradient pointers may be null.
template <typename T>
LossTerms compute_loss(int batch, int grid, const T* wp_pred, const T* anchor_pred, const T* wp_label,
                       const T* anchor_label, const LossConfig& cfg, T* d_wp, T* d_anchor);

}  // namespace rondo::nn
