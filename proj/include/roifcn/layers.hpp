#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "roifcn/tensor.hpp"

namespace roifcn {

// Kernel layout [out_c, in_c, k, k] for conv2d, [in_c, out_c, k, k] for
// conv_transpose2d. Square kernels only.
template <typename T>
struct ConvParams {
  Tensor<T> kernel;
  Tensor<T> bias;
  int stride = 1;
  int padding = 0;
};

template <typename T>
struct ConvGrads {
  Tensor<T> dx;
  Tensor<T> dkernel;
  Tensor<T> dbias;
};

namespace detail {

inline int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Smallest ox with ox*stride + kx - pad >= 0.
inline int first_valid_out(int kx, int stride, int pad) {
  const int num = pad - kx;
  if (num <= 0) return 0;
  return (num + stride - 1) / stride;
}

// Largest ox with ox*stride + kx - pad <= in_limit - 1.
inline int last_valid_out(int kx, int stride, int pad, int in_limit) {
  return (in_limit - 1 + pad - kx) / stride;
}

template <typename T>
void check_conv_args(const Tensor<T>& x, const ConvParams<T>& p, bool transpose,
                     const char* name) {
  const std::string where(name);
  if (x.rank() != 3)
    throw std::invalid_argument(where + ": input must be rank 3, got " + shape_str(x.shape()));
  if (p.kernel.rank() != 4)
    throw std::invalid_argument(where + ": kernel must be rank 4, got " +
                                shape_str(p.kernel.shape()));
  if (p.kernel.extent(2) != p.kernel.extent(3))
    throw std::invalid_argument(where + ": kernel must be square, got " +
                                shape_str(p.kernel.shape()));
  const int chan_axis = transpose ? 0 : 1;
  if (p.kernel.extent(chan_axis) != x.extent(0))
    throw std::invalid_argument(where + ": channel mismatch between input " +
                                shape_str(x.shape()) + " and kernel " +
                                shape_str(p.kernel.shape()));
  const int out_c = p.kernel.extent(transpose ? 1 : 0);
  if (p.bias.rank() != 1 || p.bias.extent(0) != out_c)
    throw std::invalid_argument(where + ": bias shape " + shape_str(p.bias.shape()) +
                                " does not match kernel " + shape_str(p.kernel.shape()));
  if (p.stride < 1) throw std::invalid_argument(where + ": stride must be >= 1");
  if (p.padding < 0) throw std::invalid_argument(where + ": padding must be >= 0");
  if (!transpose) {
    const int k = p.kernel.extent(2);
    if (x.extent(1) + 2 * p.padding < k || x.extent(2) + 2 * p.padding < k)
      throw std::invalid_argument(where + ": input " + shape_str(x.shape()) +
                                  " too small for kernel " + shape_str(p.kernel.shape()));
  }
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvParams<T>& p) {
  detail::check_conv_args(x, p, false, "conv2d_forward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(0), k = p.kernel.extent(2);
  const int s = p.stride, pad = p.padding;
  const int out_h = detail::conv_out_extent(in_h, k, s, pad);
  const int out_w = detail::conv_out_extent(in_w, k, s, pad);

  Tensor<T> y({out_c, out_h, out_w});
  for (int oc = 0; oc < out_c; ++oc) {
    const T b = p.bias(oc);
    for (int oy = 0; oy < out_h; ++oy) {
      T* yrow = &y(oc, oy, 0);
      for (int ox = 0; ox < out_w; ++ox) yrow[ox] = b;
      for (int ic = 0; ic < in_c; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s + ky - pad;
          if (iy < 0 || iy >= in_h) continue;
          const T* xrow = &x(ic, iy, 0);
          for (int kx = 0; kx < k; ++kx) {
            const T w = p.kernel(oc, ic, ky, kx);
            const int lo = detail::first_valid_out(kx, s, pad);
            const int hi = std::min(out_w - 1, detail::last_valid_out(kx, s, pad, in_w));
            for (int ox = lo; ox <= hi; ++ox) yrow[ox] += w * xrow[ox * s + kx - pad];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvParams<T>& p, const Tensor<T>& dy) {
  detail::check_conv_args(x, p, false, "conv2d_backward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(0), k = p.kernel.extent(2);
  const int s = p.stride, pad = p.padding;
  const int out_h = detail::conv_out_extent(in_h, k, s, pad);
  const int out_w = detail::conv_out_extent(in_w, k, s, pad);
  if (dy.rank() != 3 || dy.extent(0) != out_c || dy.extent(1) != out_h || dy.extent(2) != out_w)
    throw std::invalid_argument("conv2d_backward: dy shape " + shape_str(dy.shape()) +
                                " does not match output [" + std::to_string(out_c) + "," +
                                std::to_string(out_h) + "," + std::to_string(out_w) + "]");

  ConvGrads<T> g;
  g.dx = Tensor<T>(x.shape());
  g.dkernel = Tensor<T>(p.kernel.shape());
  g.dbias = Tensor<T>(p.bias.shape());
  for (int oc = 0; oc < out_c; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const T gout = dy(oc, oy, ox);
        if (gout == T(0)) continue;
        g.dbias(oc) += gout;
        for (int ic = 0; ic < in_c; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * s + ky - pad;
            if (iy < 0 || iy >= in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * s + kx - pad;
              if (ix < 0 || ix >= in_w) continue;
              g.dkernel(oc, ic, ky, kx) += gout * x(ic, iy, ix);
              g.dx(ic, iy, ix) += gout * p.kernel(oc, ic, ky, kx);
            }
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, const ConvParams<T>& p) {
  detail::check_conv_args(x, p, true, "conv_transpose2d_forward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(1), k = p.kernel.extent(2);
  const int s = p.stride, pad = p.padding;
  const int out_h = s * (in_h - 1) + k - 2 * pad;
  const int out_w = s * (in_w - 1) + k - 2 * pad;
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("conv_transpose2d_forward: non-positive output extent for input " +
                                shape_str(x.shape()));

  Tensor<T> y({out_c, out_h, out_w});
  for (int oc = 0; oc < out_c; ++oc) {
    const T b = p.bias(oc);
    T* plane = &y(oc, 0, 0);
    for (int i = 0; i < out_h * out_w; ++i) plane[i] = b;
  }
  for (int ic = 0; ic < in_c; ++ic) {
    for (int m = 0; m < in_h; ++m) {
      for (int n = 0; n < in_w; ++n) {
        const T v = x(ic, m, n);
        if (v == T(0)) continue;
        for (int oc = 0; oc < out_c; ++oc) {
          for (int a = 0; a < k; ++a) {
            const int oy = m * s + a - pad;
            if (oy < 0 || oy >= out_h) continue;
            T* yrow = &y(oc, oy, 0);
            const T* krow = &p.kernel(ic, oc, a, 0);
            for (int b = 0; b < k; ++b) {
              const int ox = n * s + b - pad;
              if (ox < 0 || ox >= out_w) continue;
              yrow[ox] += v * krow[b];
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv_transpose2d_backward(const Tensor<T>& x, const ConvParams<T>& p,
                                       const Tensor<T>& dy) {
  detail::check_conv_args(x, p, true, "conv_transpose2d_backward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(1), k = p.kernel.extent(2);
  const int s = p.stride, pad = p.padding;
  const int out_h = s * (in_h - 1) + k - 2 * pad;
  const int out_w = s * (in_w - 1) + k - 2 * pad;
  if (dy.rank() != 3 || dy.extent(0) != out_c || dy.extent(1) != out_h || dy.extent(2) != out_w)
    throw std::invalid_argument("conv_transpose2d_backward: dy shape " + shape_str(dy.shape()) +
                                " does not match output [" + std::to_string(out_c) + "," +
                                std::to_string(out_h) + "," + std::to_string(out_w) + "]");

  ConvGrads<T> g;
  g.dx = Tensor<T>(x.shape());
  g.dkernel = Tensor<T>(p.kernel.shape());
  g.dbias = Tensor<T>(p.bias.shape());
  for (int oc = 0; oc < out_c; ++oc) {
    const T* plane = &dy(oc, 0, 0);
    T acc = T(0);
    for (int i = 0; i < out_h * out_w; ++i) acc += plane[i];
    g.dbias(oc) = acc;
  }
  for (int ic = 0; ic < in_c; ++ic) {
    for (int m = 0; m < in_h; ++m) {
      for (int n = 0; n < in_w; ++n) {
        const T v = x(ic, m, n);
        T dv = T(0);
        for (int oc = 0; oc < out_c; ++oc) {
          for (int a = 0; a < k; ++a) {
            const int oy = m * s + a - pad;
            if (oy < 0 || oy >= out_h) continue;
            const T* dyrow = &dy(oc, oy, 0);
            const T* krow = &p.kernel(ic, oc, a, 0);
            T* dkrow = &g.dkernel(ic, oc, a, 0);
            for (int b = 0; b < k; ++b) {
              const int ox = n * s + b - pad;
              if (ox < 0 || ox >= out_w) continue;
              dv += dyrow[ox] * krow[b];
              dkrow[b] += dyrow[ox] * v;
            }
          }
        }
        g.dx(ic, m, n) = dv;
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

// dx = dy where the forward input was positive; the derivative at exactly 0
// is taken as 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  if (x.shape() != dy.shape())
    throw std::invalid_argument("relu_backward: shape mismatch between input " +
                                shape_str(x.shape()) + " and dy " + shape_str(dy.shape()));
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <typename T>
Tensor<std::uint8_t> relu_gates(const Tensor<T>& x) {
  Tensor<std::uint8_t> g(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) g[i] = x[i] > T(0) ? 1 : 0;
  return g;
}

template <typename T>
Tensor<T> relu_with_gates(const Tensor<T>& x, const Tensor<std::uint8_t>& gates) {
  if (x.shape() != gates.shape())
    throw std::invalid_argument("relu_with_gates: shape mismatch between input " +
                                shape_str(x.shape()) + " and gates " + shape_str(gates.shape()));
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = gates[i] ? x[i] : T(0);
  return y;
}

template <typename T>
struct MaxPool2Result {
  Tensor<T> y;
  // Flat index into the pool input for each output element, for backward
  // routing and for re-running the pool with a frozen selection.
  Tensor<int> argmax;
  std::vector<int> input_shape;
};

// 2x2 max pooling with stride 2. Ties go to the smallest flat input index,
// which the window scan order guarantees.
template <typename T>
MaxPool2Result<T> maxpool2(const Tensor<T>& x) {
  if (x.rank() != 3)
    throw std::invalid_argument("maxpool2: input must be rank 3, got " + shape_str(x.shape()));
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2: spatial extents must be even, got " +
                                shape_str(x.shape()));
  MaxPool2Result<T> r;
  r.y = Tensor<T>({c, h / 2, w / 2});
  r.argmax = Tensor<int>({c, h / 2, w / 2});
  r.input_shape = x.shape();
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < h / 2; ++oy) {
      for (int ox = 0; ox < w / 2; ++ox) {
        int best = -1;
        T best_v = T(0);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = 2 * oy + dy, ix = 2 * ox + dx;
            const int flat = (ch * h + iy) * w + ix;
            const T v = x[static_cast<std::size_t>(flat)];
            if (best < 0 || v > best_v) {
              best = flat;
              best_v = v;
            }
          }
        }
        r.y(ch, oy, ox) = best_v;
        r.argmax(ch, oy, ox) = best;
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const MaxPool2Result<T>& fwd, const Tensor<T>& dy) {
  if (dy.shape() != fwd.y.shape())
    throw std::invalid_argument("maxpool2_backward: dy shape " + shape_str(dy.shape()) +
                                " does not match pool output " + shape_str(fwd.y.shape()));
  Tensor<T> dx(fwd.input_shape);
  for (std::size_t i = 0; i < dy.numel(); ++i)
    dx[static_cast<std::size_t>(fwd.argmax[i])] += dy[i];
  return dx;
}

// Re-applies a pool with a previously recorded argmax selection.
template <typename T>
Tensor<T> maxpool2_take(const Tensor<T>& x, const Tensor<int>& argmax,
                        const std::vector<int>& pooled_shape) {
  Tensor<T> y(pooled_shape);
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = x[static_cast<std::size_t>(argmax[i])];
  return y;
}

}  // namespace roifcn
