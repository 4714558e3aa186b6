#pragma once

#include <vector>

namespace rondo::nn {

/// 2D convolution geometry; tensors are [batch][channel][row][col].
struct ConvShape {
  int in_c = 1, out_c = 1;
  int k = 1, stride = 1, pad = 0;
  int in_h = 1, in_w = 1;

  int out_h() const { return (in_h + 2 * pad - k) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - k) / stride + 1; }
  int patch() const { return in_c * k * k; }
  int weight_count() const { return out_c * patch(); }
};

// Reference kernels: plain loops, one sample at a time.
template <typename T>
void conv_forward_direct(const ConvShape& s, int batch, const T* x, const T* w, const T* b, T* y);
/// dw and db are overwritten; dx is skipped when null.
template <typename T>
void conv_backward_direct(const ConvShape& s, int batch, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db);

// im2col + GEMM, parallel over samples. Results do not depend on the thread count.
template <typename T>
void conv_forward(const ConvShape& s, int batch, const T* x, const T* w, const T* b, T* y, std::vector<T>& cols);
template <typename T>
void conv_backward(const ConvShape& s, int batch, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                   std::vector<T>& cols);

/// y[b][o] = sum_i w[o][i] x[b][i] + bias[o]
template <typename T>
void linear_forward(int batch, int in, int out, const T* x, const T* w, const T* bias, T* y);
template <typename T>
void linear_backward(int batch, int in, int out, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db);

}  // namespace rondo::nn
