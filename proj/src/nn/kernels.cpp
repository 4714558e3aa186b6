#define EIGEN_DONT_PARALLELIZE
#include "rondo/nn/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>

namespace rondo::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// cols is K x N column-major: one contiguous patch per output pixel
template <typename T>
void im2col(const ConvShape& s, const T* x, T* cols) {
  const int oh = s.out_h(), ow = s.out_w(), K = s.patch();
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      T* dst = cols + static_cast<std::size_t>(r * ow + c) * K;
      for (int ci = 0; ci < s.in_c; ++ci) {
        const T* plane = x + static_cast<std::size_t>(ci) * s.in_h * s.in_w;
        for (int kr = 0; kr < s.k; ++kr) {
          const int ir = r * s.stride - s.pad + kr;
          for (int kc = 0; kc < s.k; ++kc) {
            const int ic = c * s.stride - s.pad + kc;
            *dst++ = (ir < 0 || ir >= s.in_h || ic < 0 || ic >= s.in_w) ? T(0) : plane[ir * s.in_w + ic];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvShape& s, const T* cols, T* dx) {
  const int oh = s.out_h(), ow = s.out_w(), K = s.patch();
  std::fill(dx, dx + static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w, T(0));
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      const T* src = cols + static_cast<std::size_t>(r * ow + c) * K;
      for (int ci = 0; ci < s.in_c; ++ci) {
        T* plane = dx + static_cast<std::size_t>(ci) * s.in_h * s.in_w;
        for (int kr = 0; kr < s.k; ++kr) {
          const int ir = r * s.stride - s.pad + kr;
          for (int kc = 0; kc < s.k; ++kc, ++src) {
            const int ic = c * s.stride - s.pad + kc;
            if (ir >= 0 && ir < s.in_h && ic >= 0 && ic < s.in_w) plane[ir * s.in_w + ic] += *src;
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv_forward_direct(const ConvShape& s, int batch, const T* x, const T* w, const T* b, T* y) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t in_size = static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
  const std::size_t out_size = static_cast<std::size_t>(s.out_c) * oh * ow;
  for (int n = 0; n < batch; ++n) {
    const T* xn = x + n * in_size;
    T* yn = y + n * out_size;
    for (int o = 0; o < s.out_c; ++o) {
      for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
          T acc = b ? b[o] : T(0);
          for (int ci = 0; ci < s.in_c; ++ci)
            for (int kr = 0; kr < s.k; ++kr)
              for (int kc = 0; kc < s.k; ++kc) {
                const int ir = r * s.stride - s.pad + kr, ic = c * s.stride - s.pad + kc;
                if (ir < 0 || ir >= s.in_h || ic < 0 || ic >= s.in_w) continue;
                acc += w[((o * s.in_c + ci) * s.k + kr) * s.k + kc] * xn[(ci * s.in_h + ir) * s.in_w + ic];
              }
          yn[(o * oh + r) * ow + c] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv_backward_direct(const ConvShape& s, int batch, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t in_size = static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
  const std::size_t out_size = static_cast<std::size_t>(s.out_c) * oh * ow;
  std::fill(dw, dw + s.weight_count(), T(0));
  if (db) std::fill(db, db + s.out_c, T(0));
  if (dx) std::fill(dx, dx + batch * in_size, T(0));
  for (int n = 0; n < batch; ++n) {
    const T* xn = x + n * in_size;
    const T* dyn = dy + n * out_size;
    T* dxn = dx ? dx + n * in_size : nullptr;
    for (int o = 0; o < s.out_c; ++o) {
      for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
          const T g = dyn[(o * oh + r) * ow + c];
          if (db) db[o] += g;
          for (int ci = 0; ci < s.in_c; ++ci)
            for (int kr = 0; kr < s.k; ++kr)
              for (int kc = 0; kc < s.k; ++kc) {
                const int ir = r * s.stride - s.pad + kr, ic = c * s.stride - s.pad + kc;
                if (ir < 0 || ir >= s.in_h || ic < 0 || ic >= s.in_w) continue;
                const int wi = ((o * s.in_c + ci) * s.k + kr) * s.k + kc;
                const int xi = (ci * s.in_h + ir) * s.in_w + ic;
                dw[wi] += g * xn[xi];
                if (dxn) dxn[xi] += g * w[wi];
              }
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const ConvShape& s, int batch, const T* x, const T* w, const T* b, T* y, std::vector<T>& cols) {
  const int N = s.out_h() * s.out_w(), K = s.patch();
  const std::size_t in_size = static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
  const std::size_t out_size = static_cast<std::size_t>(s.out_c) * N;
  const std::size_t col_size = static_cast<std::size_t>(K) * N;
  cols.resize(col_size * static_cast<std::size_t>(batch));
  const Eigen::Map<const RowMat<T>> W(w, s.out_c, K);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    T* cn = cols.data() + n * col_size;
    im2col(s, x + n * in_size, cn);
    Eigen::Map<RowMat<T>> Y(y + n * out_size, s.out_c, N);
    Y.noalias() = W * Eigen::Map<const ColMat<T>>(cn, K, N);
    if (b)
      for (int o = 0; o < s.out_c; ++o) Y.row(o).array() += b[o];
  }
}

template <typename T>
void conv_backward(const ConvShape& s, int batch, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                   std::vector<T>& cols) {
  const int N = s.out_h() * s.out_w(), K = s.patch();
  const std::size_t in_size = static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
  const std::size_t out_size = static_cast<std::size_t>(s.out_c) * N;
  const std::size_t col_size = static_cast<std::size_t>(K) * N;
  if (cols.size() != col_size * static_cast<std::size_t>(batch)) {
    // forward was run elsewhere; rebuild the patches
    cols.resize(col_size * static_cast<std::size_t>(batch));
#pragma omp parallel for schedule(static)
    for (int n = 0; n < batch; ++n) im2col(s, x + n * in_size, cols.data() + n * col_size);
  }
  const Eigen::Map<const RowMat<T>> W(w, s.out_c, K);

  // weight gradient: blocks of output channels, samples summed in order
#pragma omp parallel for schedule(static)
  for (int o = 0; o < s.out_c; ++o) {
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dW(dw + static_cast<std::size_t>(o) * K, K);
    dW.setZero();
    T bias = T(0);
    for (int n = 0; n < batch; ++n) {
      const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> g(dy + n * out_size + static_cast<std::size_t>(o) * N, N);
      dW.noalias() += g * Eigen::Map<const ColMat<T>>(cols.data() + n * col_size, K, N).transpose();
      bias += g.sum();
    }
    if (db) db[o] = bias;
  }

  if (!dx) return;
#pragma omp parallel
  {
    std::vector<T> dcols(col_size);
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      Eigen::Map<ColMat<T>> dC(dcols.data(), K, N);
      dC.noalias() = W.transpose() * Eigen::Map<const RowMat<T>>(dy + n * out_size, s.out_c, N);
      col2im(s, dcols.data(), dx + n * in_size);
    }
  }
}

template <typename T>
void linear_forward(int batch, int in, int out, const T* x, const T* w, const T* bias, T* y) {
  const Eigen::Map<const RowMat<T>> X(x, batch, in);
  const Eigen::Map<const RowMat<T>> W(w, out, in);
  Eigen::Map<RowMat<T>> Y(y, batch, out);
  Y.noalias() = X * W.transpose();
  if (bias)
    for (int b = 0; b < batch; ++b)
      for (int o = 0; o < out; ++o) Y(b, o) += bias[o];
}

template <typename T>
void linear_backward(int batch, int in, int out, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db) {
  const Eigen::Map<const RowMat<T>> X(x, batch, in);
  const Eigen::Map<const RowMat<T>> W(w, out, in);
  const Eigen::Map<const RowMat<T>> dY(dy, batch, out);
  Eigen::Map<RowMat<T>> dW(dw, out, in);
  dW.noalias() = dY.transpose() * X;
  if (db)
    for (int o = 0; o < out; ++o) db[o] = dY.col(o).sum();
  if (dx) {
    Eigen::Map<RowMat<T>> dX(dx, batch, in);
    dX.noalias() = dY * W;
  }
}

#define RONDO_INSTANTIATE(T)                                                                                         \
  template void conv_forward_direct<T>(const ConvShape&, int, const T*, const T*, const T*, T*);                     \
  template void conv_backward_direct<T>(const ConvShape&, int, const T*, const T*, const T*, T*, T*, T*);            \
  template void conv_forward<T>(const ConvShape&, int, const T*, const T*, const T*, T*, std::vector<T>&);           \
  template void conv_backward<T>(const ConvShape&, int, const T*, const T*, const T*, T*, T*, T*, std::vector<T>&);  \
  template void linear_forward<T>(int, int, int, const T*, const T*, const T*, T*);                                  \
  template void linear_backward<T>(int, int, int, const T*, const T*, const T*, T*, T*, T*);

RONDO_INSTANTIATE(float)
RONDO_INSTANTIATE(double)
#undef RONDO_INSTANTIATE

}  // namespace rondo::nn
