#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "roifcn/roi_conv.hpp"
#include "roifcn/rpn.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

struct LossReport {
  double l_reg = 0;
  double l_cls = 0;
  double l_seg = 0;
  double total = 0;
  int n_pos_anchors = 0;
  int n_sampled_anchors = 0;
  long long n_inroi_pixels = 0;
  bool detection_enabled = true;
};

template <typename T>
T smooth_l1(T x) {
  const T ax = std::abs(x);
  return ax < T(1) ? T(0.5) * x * x : ax - T(0.5);
}

template <typename T>
T smooth_l1_grad(T x) {
  if (x > T(1)) return T(1);
  if (x < T(-1)) return T(-1);
  return x;
}

namespace detail {

template <typename T>
void check_delta_map(const Tensor<T>& deltas, const AnchorTargets& targets, const char* name) {
  if (deltas.rank() != 3 || deltas.extent(0) % 4 != 0)
    throw std::invalid_argument(std::string(name) + ": delta map must be [4S,fh,fw], got " +
                                shape_str(deltas.shape()));
  const std::size_t n = static_cast<std::size_t>(deltas.extent(0) / 4) * deltas.extent(1) *
                        deltas.extent(2);
  if (n != targets.label.size())
    throw std::invalid_argument(std::string(name) + ": " + std::to_string(targets.label.size()) +
                                " anchor targets do not match delta map " +
                                shape_str(deltas.shape()));
}

template <typename T>
void check_obj_map(const Tensor<T>& logits, const AnchorTargets& targets, const char* name) {
  if (logits.rank() != 3)
    throw std::invalid_argument(std::string(name) + ": objectness map must be [S,fh,fw], got " +
                                shape_str(logits.shape()));
  if (logits.numel() != targets.label.size())
    throw std::invalid_argument(std::string(name) + ": " + std::to_string(targets.label.size()) +
                                " anchor targets do not match objectness map " +
                                shape_str(logits.shape()));
}

// Anchor index a = (i * feat_w + j) * S + s <-> map offset of plane s cell (i,j).
inline std::size_t map_offset_of_anchor(int a, int n_scales, int cells) {
  const int s = a % n_scales;
  const int cell = a / n_scales;
  return static_cast<std::size_t>(s) * cells + cell;
}

}  // namespace detail

// Smooth-L1 over the four delta components of each positive anchor, averaged
// over positives; 0 when there are none.
template <typename T>
T reg_loss(const Tensor<T>& deltas, const AnchorTargets& targets) {
  detail::check_delta_map(deltas, targets, "reg_loss");
  if (targets.n_pos == 0) return T(0);
  const int n_scales = deltas.extent(0) / 4;
  const int cells = deltas.extent(1) * deltas.extent(2);
  const T* d = deltas.data();
  T acc = T(0);
  for (std::size_t a = 0; a < targets.label.size(); ++a) {
    if (targets.label[a] != AnchorLabel::kPositive) continue;
    const int s = static_cast<int>(a) % n_scales;
    const int cell = static_cast<int>(a) / n_scales;
    const BoxDelta& tgt = targets.delta[a];
    const double t[4] = {tgt.tx, tgt.ty, tgt.tw, tgt.th};
    for (int c = 0; c < 4; ++c)
      acc += smooth_l1(d[static_cast<std::size_t>(4 * s + c) * cells + cell] - static_cast<T>(t[c]));
  }
  return acc / static_cast<T>(targets.n_pos);
}

template <typename T>
Tensor<T> reg_loss_backward(const Tensor<T>& deltas, const AnchorTargets& targets) {
  detail::check_delta_map(deltas, targets, "reg_loss_backward");
  Tensor<T> grad(deltas.shape());
  if (targets.n_pos == 0) return grad;
  const int n_scales = deltas.extent(0) / 4;
  const int cells = deltas.extent(1) * deltas.extent(2);
  const T* d = deltas.data();
  T* g = grad.data();
  const T inv_n = T(1) / static_cast<T>(targets.n_pos);
  for (std::size_t a = 0; a < targets.label.size(); ++a) {
    if (targets.label[a] != AnchorLabel::kPositive) continue;
    const int s = static_cast<int>(a) % n_scales;
    const int cell = static_cast<int>(a) / n_scales;
    const BoxDelta& tgt = targets.delta[a];
    const double t[4] = {tgt.tx, tgt.ty, tgt.tw, tgt.th};
    for (int c = 0; c < 4; ++c) {
      const std::size_t off = static_cast<std::size_t>(4 * s + c) * cells + cell;
      g[off] = smooth_l1_grad(d[off] - static_cast<T>(t[c])) * inv_n;
    }
  }
  return grad;
}

// Mean sigmoid binary cross-entropy over the sampled anchors, in the
// log-sum-exp stabilized form max(z,0) - z*y + log(1 + exp(-|z|)).
template <typename T>
T objectness_loss(const Tensor<T>& logits, const AnchorTargets& targets) {
  detail::check_obj_map(logits, targets, "objectness_loss");
  if (targets.n_sampled == 0) return T(0);
  const int n_scales = logits.extent(0);
  const int cells = logits.extent(1) * logits.extent(2);
  const T* z = logits.data();
  T acc = T(0);
  for (std::size_t a = 0; a < targets.label.size(); ++a) {
    if (targets.label[a] == AnchorLabel::kIgnore) continue;
    const T zi = z[detail::map_offset_of_anchor(static_cast<int>(a), n_scales, cells)];
    const T y = targets.label[a] == AnchorLabel::kPositive ? T(1) : T(0);
    acc += std::max(zi, T(0)) - zi * y + std::log1p(std::exp(-std::abs(zi)));
  }
  return acc / static_cast<T>(targets.n_sampled);
}

template <typename T>
Tensor<T> objectness_loss_backward(const Tensor<T>& logits, const AnchorTargets& targets) {
  detail::check_obj_map(logits, targets, "objectness_loss_backward");
  Tensor<T> grad(logits.shape());
  if (targets.n_sampled == 0) return grad;
  const int n_scales = logits.extent(0);
  const int cells = logits.extent(1) * logits.extent(2);
  const T* z = logits.data();
  T* g = grad.data();
  const T inv_n = T(1) / static_cast<T>(targets.n_sampled);
  for (std::size_t a = 0; a < targets.label.size(); ++a) {
    if (targets.label[a] == AnchorLabel::kIgnore) continue;
    const std::size_t off = detail::map_offset_of_anchor(static_cast<int>(a), n_scales, cells);
    const T y = targets.label[a] == AnchorLabel::kPositive ? T(1) : T(0);
    const T sig = T(1) / (T(1) + std::exp(-z[off]));
    g[off] = (sig - y) * inv_n;
  }
  return grad;
}

namespace detail {

template <typename T>
void check_seg_args(const Tensor<T>& scores, const Tensor<std::uint8_t>& gt_mask,
                    const RoiMask& roi_mask_img, const char* name) {
  if (scores.rank() != 3 || scores.extent(0) != 2)
    throw std::invalid_argument(std::string(name) + ": scores must be [2,H,W], got " +
                                shape_str(scores.shape()));
  if (gt_mask.rank() != 2 || gt_mask.extent(0) != scores.extent(1) ||
      gt_mask.extent(1) != scores.extent(2))
    throw std::invalid_argument(std::string(name) + ": gt mask " + shape_str(gt_mask.shape()) +
                                " does not match scores " + shape_str(scores.shape()));
  if (roi_mask_img.height != scores.extent(1) || roi_mask_img.width != scores.extent(2))
    throw std::invalid_argument(std::string(name) + ": roi mask " +
                                std::to_string(roi_mask_img.height) + "x" +
                                std::to_string(roi_mask_img.width) + " does not match scores " +
                                shape_str(scores.shape()));
}

}  // namespace detail

// Softmax cross-entropy summed over in-ROI pixels (the union mask counts each
// pixel once no matter how many boxes cover it), divided by the in-ROI pixel
// count; 0 for an empty mask.
template <typename T>
T masked_seg_loss(const Tensor<T>& scores, const Tensor<std::uint8_t>& gt_mask,
                  const RoiMask& roi_mask_img) {
  detail::check_seg_args(scores, gt_mask, roi_mask_img, "masked_seg_loss");
  const int h = scores.extent(1), w = scores.extent(2);
  const T* s0 = &scores(0, 0, 0);
  const T* s1 = &scores(1, 0, 0);
  T acc = T(0);
  long long count = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!roi_mask_img.at(i, j)) continue;
      const std::size_t off = static_cast<std::size_t>(i) * w + j;
      const T a = s0[off], b = s1[off];
      const T m = std::max(a, b);
      const T lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      const T sy = gt_mask[off] ? b : a;
      acc += lse - sy;
      ++count;
    }
  }
  if (count == 0) return T(0);
  return acc / static_cast<T>(count);
}

template <typename T>
Tensor<T> masked_seg_loss_backward(const Tensor<T>& scores, const Tensor<std::uint8_t>& gt_mask,
                                   const RoiMask& roi_mask_img) {
  detail::check_seg_args(scores, gt_mask, roi_mask_img, "masked_seg_loss_backward");
  Tensor<T> grad(scores.shape());
  const long long count = static_cast<long long>(roi_mask_img.count());
  if (count == 0) return grad;
  const int h = scores.extent(1), w = scores.extent(2);
  const T* s0 = &scores(0, 0, 0);
  const T* s1 = &scores(1, 0, 0);
  T* g0 = &grad(0, 0, 0);
  T* g1 = &grad(1, 0, 0);
  const T inv_n = T(1) / static_cast<T>(count);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!roi_mask_img.at(i, j)) continue;
      const std::size_t off = static_cast<std::size_t>(i) * w + j;
      const T a = s0[off], b = s1[off];
      const T m = std::max(a, b);
      const T ea = std::exp(a - m), eb = std::exp(b - m);
      const T p1 = eb / (ea + eb);
      const T y = gt_mask[off] ? T(1) : T(0);
      g0[off] = ((T(1) - p1) - (T(1) - y)) * inv_n;
      g1[off] = (p1 - y) * inv_n;
    }
  }
  return grad;
}

inline LossReport total_loss(double l_reg, double l_cls, double l_seg, int n_pos, int n_sampled,
                             long long n_inroi, bool detection_enabled) {
  LossReport r;
  r.detection_enabled = detection_enabled;
  r.l_reg = detection_enabled ? l_reg : 0.0;
  r.l_cls = detection_enabled ? l_cls : 0.0;
  r.l_seg = l_seg;
  r.total = r.l_reg + r.l_cls + r.l_seg;
  r.n_pos_anchors = n_pos;
  r.n_sampled_anchors = n_sampled;
  r.n_inroi_pixels = n_inroi;
  return r;
}

}  // namespace roifcn
