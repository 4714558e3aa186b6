#include "rondo/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "rondo/rng.hpp"

namespace rondo::nn {

void NetworkConfig::validate() const {
  if (input_size <= 0 || in_channels <= 0) throw ShapeError("network input must be non-empty");
  if ((input_size >> stage_channels.size()) << stage_channels.size() != input_size)
    throw ShapeError("input size " + std::to_string(input_size) + " is not divisible by 2^stages");
  if (latent_size() < 2 || latent_size() % 2 != 0) throw ShapeError("latent grid must be even and at least 2");
  for (const int c : stage_channels)
    if (c <= 0) throw ShapeError("stage channels must be positive");
  if (adapter_channels <= 0 || latent_channels <= 0 || head_channels <= 0 || hidden <= 0 || pred_hidden <= 0)
    throw ShapeError("layer widths must be positive");
}

template <typename T>
int Network<T>::add_param(std::string name, std::vector<int> shape, bool decay) {
  Param<T> p;
  p.name = std::move(name);
  std::size_t n = 1;
  for (const int d : shape) n *= static_cast<std::size_t>(d);
  p.shape = std::move(shape);
  p.value.assign(n, T(0));
  p.grad.assign(n, T(0));
  p.decay = decay;
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size() - 1);
}

template <typename T>
typename Network<T>::Conv Network<T>::make_conv(const std::string& name, int in_c, int out_c, int k, int stride,
                                                int pad, int size) {
  Conv c;
  c.shape = ConvShape{in_c, out_c, k, stride, pad, size, size};
  c.w = add_param(name + ".w", {out_c, in_c, k, k}, true);
  c.b = add_param(name + ".b", {out_c}, false);
  return c;
}

template <typename T>
Network<T>::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  int size = cfg_.input_size;
  trunk_.push_back(make_conv("adapter", cfg_.in_channels, cfg_.adapter_channels, 1, 1, 0, size));
  int ch = cfg_.adapter_channels;
  for (std::size_t i = 0; i < cfg_.stage_channels.size(); ++i) {
    trunk_.push_back(make_conv("stage" + std::to_string(i + 1), ch, cfg_.stage_channels[i], 3, 2, 1, size));
    ch = cfg_.stage_channels[i];
    size /= 2;
  }
  trunk_.push_back(make_conv("latent", ch, cfg_.latent_channels, 3, 1, 1, size));

  wp_conv_ = make_conv("wp_conv", cfg_.latent_channels, cfg_.head_channels, 4, 2, 1, size);
  const int flat = cfg_.head_channels * wp_conv_.shape.out_h() * wp_conv_.shape.out_w();
  fc1_ = Dense{flat, cfg_.hidden, add_param("wp_fc1.w", {cfg_.hidden, flat}, true),
               add_param("wp_fc1.b", {cfg_.hidden}, false)};
  fc2_ = Dense{cfg_.hidden, kWaypointOutputs, add_param("wp_fc2.w", {kWaypointOutputs, cfg_.hidden}, true),
               add_param("wp_fc2.b", {kWaypointOutputs}, false)};
  pred1_ = make_conv("pred1", cfg_.latent_channels, cfg_.pred_hidden, 1, 1, 0, size);
  pred2_ = make_conv("pred2", cfg_.pred_hidden, kAnchorOutputs, 1, 1, 0, size);
}

template <typename T>
void Network<T>::init(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "network-init"));
  for (Param<T>& p : params_) {
    std::fill(p.value.begin(), p.value.end(), T(0));
    if (!p.decay) continue;
    const std::size_t fan_in = p.value.size() / static_cast<std::size_t>(p.shape[0]);
    const bool output_layer = p.name == "wp_fc2.w" || p.name == "pred2.w";
    const double std = std::sqrt((output_layer ? 1.0 : 2.0) / static_cast<double>(fan_in));
    for (T& v : p.value) v = static_cast<T>(std * rng.normal());
  }
  // prior of 1% occupied anchors
  params_[static_cast<std::size_t>(pred2_.b)].value[0] = static_cast<T>(-std::log(99.0));
}

template <typename T>
Param<T>& Network<T>::param(const std::string& name) {
  for (Param<T>& p : params_)
    if (p.name == name) return p;
  throw ShapeError("no parameter named " + name);
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const Param<T>& p : params_) n += p.size();
  return n;
}

template <typename T>
void Network<T>::conv_fwd(Conv& c, const T* x, T* y) {
  const T* w = params_[static_cast<std::size_t>(c.w)].value.data();
  const T* b = params_[static_cast<std::size_t>(c.b)].value.data();
  if (use_reference) conv_forward_direct(c.shape, batch_, x, w, b, y);
  else conv_forward(c.shape, batch_, x, w, b, y, c.cols);
}

template <typename T>
void Network<T>::conv_bwd(Conv& c, const T* x, const T* dy, T* dx) {
  Param<T>& w = params_[static_cast<std::size_t>(c.w)];
  Param<T>& b = params_[static_cast<std::size_t>(c.b)];
  if (use_reference) conv_backward_direct(c.shape, batch_, x, w.value.data(), dy, dx, w.grad.data(), b.grad.data());
  else conv_backward(c.shape, batch_, x, w.value.data(), dy, dx, w.grad.data(), b.grad.data(), c.cols);
}

namespace {

template <typename T>
void relu(std::vector<T>& v) {
  for (T& x : v) x = std::max(x, T(0));
}

// gradient through relu, given its output
template <typename T>
void relu_back(const std::vector<T>& out, std::vector<T>& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(out[i] > T(0))) grad[i] = T(0);
}

std::size_t volume(const ConvShape& s, bool output) {
  return output ? static_cast<std::size_t>(s.out_c) * s.out_h() * s.out_w()
                : static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
}

}  // namespace

template <typename T>
void Network<T>::forward(int batch, const T* input) {
  if (batch <= 0) throw ShapeError("batch must be positive");
  batch_ = batch;
  const auto B = static_cast<std::size_t>(batch);
  trunk_out_.resize(trunk_.size() + 1);
  trunk_out_[0].assign(input, input + B * volume(trunk_.front().shape, false));
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    trunk_out_[i + 1].resize(B * volume(trunk_[i].shape, true));
    conv_fwd(trunk_[i], trunk_out_[i].data(), trunk_out_[i + 1].data());
    relu(trunk_out_[i + 1]);
  }
  const std::vector<T>& latent = trunk_out_.back();

  wp_conv_out_.resize(B * volume(wp_conv_.shape, true));
  conv_fwd(wp_conv_, latent.data(), wp_conv_out_.data());
  relu(wp_conv_out_);
  fc1_out_.resize(B * static_cast<std::size_t>(fc1_.out));
  linear_forward(batch, fc1_.in, fc1_.out, wp_conv_out_.data(), params_[static_cast<std::size_t>(fc1_.w)].value.data(),
                 params_[static_cast<std::size_t>(fc1_.b)].value.data(), fc1_out_.data());
  relu(fc1_out_);
  wp_out_.resize(B * kWaypointOutputs);
  linear_forward(batch, fc2_.in, fc2_.out, fc1_out_.data(), params_[static_cast<std::size_t>(fc2_.w)].value.data(),
                 params_[static_cast<std::size_t>(fc2_.b)].value.data(), wp_out_.data());

  pred1_out_.resize(B * volume(pred1_.shape, true));
  conv_fwd(pred1_, latent.data(), pred1_out_.data());
  relu(pred1_out_);
  anchor_out_.resize(B * volume(pred2_.shape, true));
  conv_fwd(pred2_, pred1_out_.data(), anchor_out_.data());
}

template <typename T>
void Network<T>::backward(const T* d_waypoints, const T* d_anchors) {
  if (batch_ <= 0) throw ShapeError("backward called before forward");
  const auto B = static_cast<std::size_t>(batch_);
  const std::vector<T>& latent = trunk_out_.back();
  std::vector<T> d_latent(latent.size(), T(0));

  // waypoints head
  std::vector<T> d_fc1(fc1_out_.size());
  Param<T>& w2 = params_[static_cast<std::size_t>(fc2_.w)];
  linear_backward(batch_, fc2_.in, fc2_.out, fc1_out_.data(), w2.value.data(), d_waypoints, d_fc1.data(),
                  w2.grad.data(), params_[static_cast<std::size_t>(fc2_.b)].grad.data());
  relu_back(fc1_out_, d_fc1);
  std::vector<T> d_wp_conv(wp_conv_out_.size());
  Param<T>& w1 = params_[static_cast<std::size_t>(fc1_.w)];
  linear_backward(batch_, fc1_.in, fc1_.out, wp_conv_out_.data(), w1.value.data(), d_fc1.data(), d_wp_conv.data(),
                  w1.grad.data(), params_[static_cast<std::size_t>(fc1_.b)].grad.data());
  relu_back(wp_conv_out_, d_wp_conv);
  conv_bwd(wp_conv_, latent.data(), d_wp_conv.data(), d_latent.data());

  // prediction head
  std::vector<T> d_pred1(pred1_out_.size());
  conv_bwd(pred2_, pred1_out_.data(), d_anchors, d_pred1.data());
  relu_back(pred1_out_, d_pred1);
  std::vector<T> d_latent_pred(latent.size());
  conv_bwd(pred1_, latent.data(), d_pred1.data(), d_latent_pred.data());
  for (std::size_t i = 0; i < d_latent.size(); ++i) d_latent[i] += d_latent_pred[i];

  // backbone
  std::vector<T> grad = std::move(d_latent);
  for (std::size_t i = trunk_.size(); i-- > 0;) {
    relu_back(trunk_out_[i + 1], grad);
    std::vector<T> d_in;
    if (i > 0) d_in.resize(B * volume(trunk_[i].shape, false));
    conv_bwd(trunk_[i], trunk_out_[i].data(), grad.data(), i > 0 ? d_in.data() : nullptr);
    grad = std::move(d_in);
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace rondo::nn
