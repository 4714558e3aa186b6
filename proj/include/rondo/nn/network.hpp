#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rondo/nn/kernels.hpp"

namespace rondo::nn {

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kWaypointOutputs = 30;
inline constexpr int kAnchorOutputs = 5;

/// Backbone: 1x1 adapter, one conv3/s2 stage per entry of `stage_channels`, a
/// conv3/s1 latent layer. Waypoints head: conv4/s2 + MLP. Prediction head: two 1x1 convs.
struct NetworkConfig {
  int input_size = 64;
  int in_channels = 13;
  int adapter_channels = 8;
  std::vector<int> stage_channels{16, 32};
  int latent_channels = 32;
  int head_channels = 32;
  int hidden = 128;
  int pred_hidden = 32;

  int latent_size() const { return input_size >> stage_channels.size(); }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool decay = true;  // weights decay, biases do not

  std::size_t size() const { return value.size(); }
};

template <typename T>
class Network {
 public:
  explicit Network(NetworkConfig cfg = {});

  /// He-normal weights, zero biases, existence logits biased towards "empty".
  void init(std::uint64_t seed);

  /// `input` is [batch][in_channels][input_size][input_size].
  void forward(int batch, const T* input);
  /// Waypoints [batch][30] as (x, y) pairs; anchors [batch][5][S][S].
  const std::vector<T>& waypoints() const { return wp_out_; }
  const std::vector<T>& anchors() const { return anchor_out_; }
  /// Gradients of the loss w.r.t. both outputs; fills every Param::grad.
  void backward(const T* d_waypoints, const T* d_anchors);

  const NetworkConfig& config() const { return cfg_; }
  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }
  Param<T>& param(const std::string& name);
  std::size_t parameter_count() const;
  int batch() const { return batch_; }

  /// Direct loop kernels instead of im2col + GEMM.
  bool use_reference = false;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(cfg_);
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (std::size_t j = 0; j < params_[i].value.size(); ++j)
        out.params()[i].value[j] = static_cast<U>(params_[i].value[j]);
    return out;
  }

 private:
  struct Conv {
    ConvShape shape;
    int w = -1, b = -1;  // param indices
    std::vector<T> cols;
  };
  struct Dense {
    int in = 0, out = 0;
    int w = -1, b = -1;
  };

  int add_param(std::string name, std::vector<int> shape, bool decay);
  Conv make_conv(const std::string& name, int in_c, int out_c, int k, int stride, int pad, int size);
  void conv_fwd(Conv& c, const T* x, T* y);
  void conv_bwd(Conv& c, const T* x, const T* dy, T* dx);

  NetworkConfig cfg_;
  std::vector<Param<T>> params_;
  std::vector<Conv> trunk_;
  Conv wp_conv_, pred1_, pred2_;
  Dense fc1_, fc2_;

  int batch_ = 0;
  std::vector<std::vector<T>> trunk_out_;  // [0] is the input
  std::vector<T> wp_conv_out_, fc1_out_, wp_out_, pred1_out_, anchor_out_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace rondo::nn
