#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "roifcn/box.hpp"
#include "roifcn/layers.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

// Binary indicator grid over a feature (or image) grid: 1 where a cell lies
// inside the union of the regions of interest.
struct RoiMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> grid;

  RoiMask() = default;
  RoiMask(int h, int w) : height(h), width(w), grid(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t at(int i, int j) const { return grid[static_cast<std::size_t>(i) * width + j]; }
  void set(int i, int j, std::uint8_t v) { grid[static_cast<std::size_t>(i) * width + j] = v; }

  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint8_t v : grid) n += v;
    return n;
  }
  bool all_ones() const { return count() == grid.size(); }

  bool operator==(const RoiMask&) const = default;
};

// Union of boxes as a binary mask. Boxes must already be clipped to the grid;
// overlapping boxes set a cell exactly once.
inline RoiMask rasterize_rois(const std::vector<Box>& boxes, int height, int width) {
  RoiMask mask(height, width);
  for (const Box& b : boxes) {
    if (b.x1 < b.x0 || b.y1 < b.y0 || b.x0 < 0 || b.y0 < 0 || b.x1 >= width || b.y1 >= height)
      throw std::invalid_argument("rasterize_rois: box " + box_str(b) + " outside " +
                                  std::to_string(height) + "x" + std::to_string(width) + " grid");
    for (int i = b.y0; i <= b.y1; ++i)
      for (int j = b.x0; j <= b.x1; ++j) mask.set(i, j, 1);
  }
  return mask;
}

// Block-replicates a feature-grid mask to image resolution.
inline RoiMask upscale_mask(const RoiMask& mask, int factor) {
  if (factor < 1) throw std::invalid_argument("upscale_mask: factor must be >= 1");
  RoiMask out(mask.height * factor, mask.width * factor);
  for (int i = 0; i < out.height; ++i)
    for (int j = 0; j < out.width; ++j) out.set(i, j, mask.at(i / factor, j / factor));
  return out;
}

namespace detail {

template <typename T>
void check_roi_conv_args(const Tensor<T>& x, const ConvParams<T>& p, const RoiMask& mask,
                         const char* name) {
  check_conv_args(x, p, false, name);
  const std::string where(name);
  const int k = p.kernel.extent(2);
  if (p.stride != 1 || k % 2 == 0 || p.padding != k / 2)
    throw std::invalid_argument(where +
                                ": requires stride 1, odd kernel and same-padding (pad = k/2), "
                                "got k=" +
                                std::to_string(k) + " stride=" + std::to_string(p.stride) +
                                " pad=" + std::to_string(p.padding));
  if (mask.height != x.extent(1) || mask.width != x.extent(2))
    throw std::invalid_argument(where + ": mask " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " does not match output extents of " +
                                shape_str(x.shape()));
}

}  // namespace detail

// Convolution evaluated only at in-mask output positions; everything outside
// the ROI union (bias included) is exactly 0. Out-of-mask columns are never
// computed. Per-element accumulation order matches conv2d_forward, so a
// full mask reproduces it bit for bit.
template <typename T>
Tensor<T> roi_conv_forward(const Tensor<T>& x, const ConvParams<T>& p, const RoiMask& mask) {
  detail::check_roi_conv_args(x, p, mask, "roi_conv_forward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(0), k = p.kernel.extent(2);
  const int pad = p.padding;

  Tensor<T> y({out_c, in_h, in_w});
  std::vector<std::pair<int, int>> runs;
  for (int oc = 0; oc < out_c; ++oc) {
    const T b = p.bias(oc);
    for (int oy = 0; oy < in_h; ++oy) {
      const std::uint8_t* mrow = &mask.grid[static_cast<std::size_t>(oy) * in_w];
      runs.clear();
      for (int ox = 0; ox < in_w;) {
        if (!mrow[ox]) {
          ++ox;
          continue;
        }
        int end = ox;
        while (end + 1 < in_w && mrow[end + 1]) ++end;
        runs.emplace_back(ox, end);
        ox = end + 1;
      }
      if (runs.empty()) continue;
      T* yrow = &y(oc, oy, 0);
      for (auto [lo, hi] : runs)
        for (int ox = lo; ox <= hi; ++ox) yrow[ox] = b;
      for (int ic = 0; ic < in_c; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= in_h) continue;
          const T* xrow = &x(ic, iy, 0);
          for (int kx = 0; kx < k; ++kx) {
            const T w = p.kernel(oc, ic, ky, kx);
            const int vlo = detail::first_valid_out(kx, 1, pad);
            const int vhi = std::min(in_w - 1, detail::last_valid_out(kx, 1, pad, in_w));
            for (auto [lo, hi] : runs) {
              const int a = std::max(lo, vlo), z = std::min(hi, vhi);
              for (int ox = a; ox <= z; ++ox) yrow[ox] += w * xrow[ox + kx - pad];
            }
          }
        }
      }
    }
  }
  return y;
}

// Gradients of the masked convolution: only in-mask output positions
// contribute to dX, dKernel and dBias. Equals conv2d_backward(x, p, dy .* mask)
// and is bit-identical to it under a full mask.
template <typename T>
ConvGrads<T> roi_conv_backward(const Tensor<T>& x, const ConvParams<T>& p, const RoiMask& mask,
                               const Tensor<T>& dy) {
  detail::check_roi_conv_args(x, p, mask, "roi_conv_backward");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(0), k = p.kernel.extent(2);
  const int pad = p.padding;
  if (dy.rank() != 3 || dy.extent(0) != out_c || dy.extent(1) != in_h || dy.extent(2) != in_w)
    throw std::invalid_argument("roi_conv_backward: dy shape " + shape_str(dy.shape()) +
                                " does not match output [" + std::to_string(out_c) + "," +
                                std::to_string(in_h) + "," + std::to_string(in_w) + "]");

  ConvGrads<T> g;
  g.dx = Tensor<T>(x.shape());
  g.dkernel = Tensor<T>(p.kernel.shape());
  g.dbias = Tensor<T>(p.bias.shape());
  for (int oc = 0; oc < out_c; ++oc) {
    for (int oy = 0; oy < in_h; ++oy) {
      const std::uint8_t* mrow = &mask.grid[static_cast<std::size_t>(oy) * in_w];
      for (int ox = 0; ox < in_w; ++ox) {
        if (!mrow[ox]) continue;
        const T gout = dy(oc, oy, ox);
        if (gout == T(0)) continue;
        g.dbias(oc) += gout;
        for (int ic = 0; ic < in_c; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox + kx - pad;
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

}  // namespace roifcn
