#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "roifcn/box.hpp"
#include "roifcn/errors.hpp"
#include "roifcn/layers.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/roi_conv.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

// Per-region baseline: crops each ROI with a kernel halo (zero-filled outside
// the image), convolves the crop densely, and writes the result back into the
// output region. Overlapping regions recompute identical values, which is
// exactly the redundant work the image-wise path avoids.
template <typename T>
Tensor<T> region_wise_roi_conv(const Tensor<T>& x, const ConvParams<T>& p,
                               const std::vector<Box>& boxes) {
  detail::check_roi_conv_args(x, p, RoiMask(x.extent(1), x.extent(2)), "region_wise_roi_conv");
  const int in_c = x.extent(0), in_h = x.extent(1), in_w = x.extent(2);
  const int out_c = p.kernel.extent(0);
  const int pad = p.padding;
  Tensor<T> out({out_c, in_h, in_w});
  ConvParams<T> crop_params;
  crop_params.kernel = p.kernel;
  crop_params.bias = p.bias;
  crop_params.stride = 1;
  crop_params.padding = 0;
  for (const Box& b : boxes) {
    if (b.x0 < 0 || b.y0 < 0 || b.x1 >= in_w || b.y1 >= in_h || b.x1 < b.x0 || b.y1 < b.y0)
      throw std::invalid_argument("region_wise_roi_conv: box " + box_str(b) + " outside grid");
    const int bh = b.height(), bw = b.width();
    Tensor<T> crop({in_c, bh + 2 * pad, bw + 2 * pad});
    for (int c = 0; c < in_c; ++c) {
      for (int y = 0; y < bh + 2 * pad; ++y) {
        const int iy = b.y0 + y - pad;
        if (iy < 0 || iy >= in_h) continue;
        for (int xx = 0; xx < bw + 2 * pad; ++xx) {
          const int ix = b.x0 + xx - pad;
          if (ix < 0 || ix >= in_w) continue;
          crop(c, y, xx) = x(c, iy, ix);
        }
      }
    }
    const Tensor<T> y = conv2d_forward(crop, crop_params);
    for (int c = 0; c < out_c; ++c)
      for (int yy = 0; yy < bh; ++yy)
        for (int xx = 0; xx < bw; ++xx) out(c, b.y0 + yy, b.x0 + xx) = y(c, yy, xx);
  }
  return out;
}

struct BenchRow {
  int h = 0, w = 0, n_rois = 0;
  double coverage = 0;
  double t_imagewise_us = 0;
  double t_regionwise_us = 0;
};

namespace detail {

inline std::vector<Box> random_bench_boxes(Rng& rng, int h, int w, int n) {
  std::vector<Box> boxes;
  for (int i = 0; i < n; ++i) {
    const int side_h = rng.uniform_int(std::max(1, h / 8), std::max(1, h / 2));
    const int side_w = rng.uniform_int(std::max(1, w / 8), std::max(1, w / 2));
    const int y0 = rng.uniform_int(0, h - side_h);
    const int x0 = rng.uniform_int(0, w - side_w);
    boxes.push_back(Box{x0, y0, x0 + side_w - 1, y0 + side_h - 1});
  }
  return boxes;
}

}  // namespace detail

// Times image-wise masked convolution against the per-region baseline on one
// (size, roi count) cell. Agreement on the ROI union is asserted before any
// timing; a mismatch throws (the caller maps that to exit code 2).
inline BenchRow bench_cell(int h, int w, int n_rois, int reps, Rng& rng) {
  const int channels = 8, k = 3;
  ConvParams<float> p;
  p.kernel = Tensor<float>({channels, channels, k, k});
  p.bias = Tensor<float>({channels});
  p.stride = 1;
  p.padding = k / 2;
  for (std::size_t i = 0; i < p.kernel.numel(); ++i)
    p.kernel[i] = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (std::size_t i = 0; i < p.bias.numel(); ++i)
    p.bias[i] = static_cast<float>(rng.uniform(-0.5, 0.5));
  Tensor<float> x({channels, h, w});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));

  const std::vector<Box> boxes = detail::random_bench_boxes(rng, h, w, n_rois);
  const RoiMask mask = rasterize_rois(boxes, h, w);

  const Tensor<float> y_img = roi_conv_forward(x, p, mask);
  const Tensor<float> y_reg = region_wise_roi_conv(x, p, boxes);
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        if (!mask.at(i, j)) continue;
        const float a = y_img(c, i, j), b = y_reg(c, i, j);
        if (std::abs(a - b) > 1e-6f * std::max(1.0f, std::max(std::abs(a), std::abs(b))))
          throw NumericalError("bench: image-wise and region-wise paths disagree at (" +
                                   std::to_string(c) + "," + std::to_string(i) + "," +
                                   std::to_string(j) + "): " + std::to_string(a) + " vs " +
                                   std::to_string(b));
      }
    }
  }

  BenchRow row;
  row.h = h;
  row.w = w;
  row.n_rois = n_rois;
  row.coverage = static_cast<double>(mask.count()) / (static_cast<double>(h) * w);

  volatile float sink = 0;
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  for (int r = 0; r < reps; ++r) {
    const Tensor<float> y = roi_conv_forward(x, p, mask);
    sink = sink + y[0];
  }
  const auto t1 = clock::now();
  for (int r = 0; r < reps; ++r) {
    const Tensor<float> y = region_wise_roi_conv(x, p, boxes);
    sink = sink + y[0];
  }
  const auto t2 = clock::now();
  row.t_imagewise_us =
      std::chrono::duration<double, std::micro>(t1 - t0).count() / std::max(1, reps);
  row.t_regionwise_us =
      std::chrono::duration<double, std::micro>(t2 - t1).count() / std::max(1, reps);
  return row;
}

inline std::vector<BenchRow> bench_grid(const std::vector<int>& sizes,
                                        const std::vector<int>& roi_counts, int reps,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<BenchRow> rows;
  for (int size : sizes)
    for (int n : roi_counts) rows.push_back(bench_cell(size, size, n, reps, rng));
  return rows;
}

}  // namespace roifcn
