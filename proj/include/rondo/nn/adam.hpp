#pragma once

#include <vector>

#include "rondo/nn/network.hpp"

namespace rondo::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled, weights only
};

/// Learning rate after `epoch` completed epochs.
inline double scheduled_lr(double lr0, double decay, int epoch) {
  double lr = lr0;
  for (int e = 0; e < epoch; ++e) lr *= decay;
  return lr;
}

template <typename T>
class Adam {
 public:
  explicit Adam(const std::vector<Param<T>>& params);

  /// One update with bias correction; `lr` overrides the config rate.
  void step(std::vector<Param<T>>& params, const AdamConfig& cfg, double lr);
  long steps() const { return t_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace rondo::nn
