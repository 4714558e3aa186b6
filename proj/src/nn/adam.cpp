#include "rondo/nn/adam.hpp"

#include <cmath>

namespace rondo::nn {

template <typename T>
Adam<T>::Adam(const std::vector<Param<T>>& params) {
  for (const Param<T>& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::step(std::vector<Param<T>>& params, const AdamConfig& cfg, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = params[i];
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    const double decay = p.decay ? lr * cfg.weight_decay : 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = static_cast<double>(p.grad[j]);
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      double w = static_cast<double>(p.value[j]);
      w -= decay * w;
      w -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
      p.value[j] = static_cast<T>(w);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace rondo::nn
