#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "roifcn/box.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

// Box-regression offsets: center shift normalized by anchor size, log size
// ratios (the Faster R-CNN parameterization).
struct BoxDelta {
  double tx = 0, ty = 0, tw = 0, th = 0;
};

// One square anchor per (feature cell, scale). Index layout:
// a = (i * feat_w + j) * n_scales + s, matching an [S, fh, fw] score map read
// as score(s, i, j).
inline std::vector<Box> generate_anchors(int feat_h, int feat_w, int stride,
                                         const std::vector<int>& scales) {
  if (stride < 1) throw std::invalid_argument("generate_anchors: stride must be >= 1");
  if (scales.empty()) throw std::invalid_argument("generate_anchors: scales must be non-empty");
  std::vector<Box> anchors;
  anchors.reserve(static_cast<std::size_t>(feat_h) * feat_w * scales.size());
  for (int i = 0; i < feat_h; ++i) {
    for (int j = 0; j < feat_w; ++j) {
      const double cx = (j + 0.5) * stride;
      const double cy = (i + 0.5) * stride;
      for (int side : scales) {
        const int x0 = static_cast<int>(std::lround(cx - side / 2.0));
        const int y0 = static_cast<int>(std::lround(cy - side / 2.0));
        anchors.push_back(Box{x0, y0, x0 + side - 1, y0 + side - 1});
      }
    }
  }
  return anchors;
}

namespace detail {

inline void check_box_size(const Box& b, const char* name) {
  if (b.x1 < b.x0 || b.y1 < b.y0)
    throw std::invalid_argument(std::string(name) + ": non-positive box size " + box_str(b));
}

}  // namespace detail

// Center/size form of an inclusive box: cx = (x0+x1)/2, w = x1-x0+1.
inline BoxDelta encode_box(const Box& gt, const Box& anchor) {
  detail::check_box_size(gt, "encode_box");
  detail::check_box_size(anchor, "encode_box");
  const double aw = anchor.width(), ah = anchor.height();
  const double acx = 0.5 * (anchor.x0 + anchor.x1), acy = 0.5 * (anchor.y0 + anchor.y1);
  const double gw = gt.width(), gh = gt.height();
  const double gcx = 0.5 * (gt.x0 + gt.x1), gcy = 0.5 * (gt.y0 + gt.y1);
  return BoxDelta{(gcx - acx) / aw, (gcy - acy) / ah, std::log(gw / aw), std::log(gh / ah)};
}

// Inverts encode_box up to floating-point rounding; the result is rounded to
// inclusive integer coordinates (clipping is the caller's job).
inline Box decode_box(const BoxDelta& d, const Box& anchor) {
  detail::check_box_size(anchor, "decode_box");
  const double aw = anchor.width(), ah = anchor.height();
  const double acx = 0.5 * (anchor.x0 + anchor.x1), acy = 0.5 * (anchor.y0 + anchor.y1);
  const double cx = acx + d.tx * aw, cy = acy + d.ty * ah;
  const double w = aw * std::exp(d.tw), h = ah * std::exp(d.th);
  Box b;
  b.x0 = static_cast<int>(std::lround(cx - 0.5 * (w - 1)));
  b.y0 = static_cast<int>(std::lround(cy - 0.5 * (h - 1)));
  b.x1 = static_cast<int>(std::lround(cx + 0.5 * (w - 1)));
  b.y1 = static_cast<int>(std::lround(cy + 0.5 * (h - 1)));
  return b;
}

enum class AnchorLabel : std::int8_t { kNegative = 0, kPositive = 1, kIgnore = -1 };

struct AnchorTargets {
  std::vector<AnchorLabel> label;
  // Regression target per anchor; meaningful only where label is positive.
  std::vector<BoxDelta> delta;
  int n_pos = 0;
  int n_sampled = 0;  // positives + kept negatives
};

// Positive iff IoU >= iou_hi with some gt, or the anchor is the argmax-IoU
// anchor of some gt (ties toward the lowest anchor index). Negative iff
// max-IoU < iou_lo and not positive. When positives+negatives exceed
// max_samples, negatives are subsampled with the passed RNG to a 1:1 ratio
// with the positives where possible (they fill the whole budget when there
// are no positives); dropped negatives become ignore.
inline AnchorTargets assign_anchor_targets(const std::vector<Box>& anchors,
                                           const std::vector<Box>& gt_boxes, double iou_hi,
                                           double iou_lo, int max_samples, Rng& rng) {
  if (!(iou_lo < iou_hi))
    throw std::invalid_argument("assign_anchor_targets: requires iou_lo < iou_hi");
  const int n = static_cast<int>(anchors.size());
  const int m = static_cast<int>(gt_boxes.size());
  AnchorTargets t;
  t.label.assign(static_cast<std::size_t>(n), AnchorLabel::kIgnore);
  t.delta.assign(static_cast<std::size_t>(n), BoxDelta{});

  std::vector<double> max_iou(static_cast<std::size_t>(n), 0.0);
  std::vector<int> best_gt(static_cast<std::size_t>(n), -1);
  std::vector<int> gt_argmax(static_cast<std::size_t>(m), -1);
  std::vector<double> gt_best(static_cast<std::size_t>(m), -1.0);
  for (int a = 0; a < n; ++a) {
    for (int g = 0; g < m; ++g) {
      const double v = iou(anchors[a], gt_boxes[g]);
      if (v > max_iou[a] || best_gt[a] < 0) {
        max_iou[a] = v;
        best_gt[a] = g;
      }
      if (v > gt_best[g]) {
        gt_best[g] = v;
        gt_argmax[g] = a;
      }
    }
  }

  for (int a = 0; a < n; ++a) {
    if (m > 0 && max_iou[a] >= iou_hi)
      t.label[a] = AnchorLabel::kPositive;
    else if (max_iou[a] < iou_lo)
      t.label[a] = AnchorLabel::kNegative;
  }
  for (int g = 0; g < m; ++g) t.label[gt_argmax[g]] = AnchorLabel::kPositive;

  std::vector<int> negatives;
  for (int a = 0; a < n; ++a) {
    if (t.label[a] == AnchorLabel::kPositive) {
      ++t.n_pos;
      t.delta[a] = encode_box(gt_boxes[best_gt[a]], anchors[a]);
    } else if (t.label[a] == AnchorLabel::kNegative) {
      negatives.push_back(a);
    }
  }

  int n_neg = static_cast<int>(negatives.size());
  if (t.n_pos + n_neg > max_samples) {
    const int budget = std::max(0, max_samples - t.n_pos);
    const int keep = std::min(n_neg, t.n_pos == 0 ? max_samples : std::min(t.n_pos, budget));
    // Partial Fisher-Yates: the first `keep` entries become the kept sample.
    for (int i = 0; i < keep; ++i) {
      const int j = rng.uniform_int(i, n_neg - 1);
      std::swap(negatives[static_cast<std::size_t>(i)], negatives[static_cast<std::size_t>(j)]);
    }
    for (int i = keep; i < n_neg; ++i)
      t.label[negatives[static_cast<std::size_t>(i)]] = AnchorLabel::kIgnore;
    n_neg = keep;
  }
  t.n_sampled = t.n_pos + n_neg;
  return t;
}

struct ProposalConfig {
  int pre_nms_k = 12;
  int post_nms_k = 4;
  double nms_thresh = 0.7;
  int img_h = 64;
  int img_w = 64;
  int stride = 4;
};

// Maps an image-grid box to the smallest feature-grid box covering it.
inline Box image_box_to_feature(const Box& b, int stride, int feat_h, int feat_w) {
  Box f;
  f.x0 = b.x0 / stride;
  f.y0 = b.y0 / stride;
  f.x1 = std::min(feat_w - 1, b.x1 / stride);
  f.y1 = std::min(feat_h - 1, b.y1 / stride);
  return f;
}

// Greedy non-maximum suppression over boxes already sorted by descending
// score: a box is kept iff its IoU with every previously kept box is at most
// thresh; at most max_keep boxes are kept.
inline std::vector<Box> greedy_nms(const std::vector<Box>& sorted, double thresh, int max_keep) {
  std::vector<Box> kept;
  for (const Box& b : sorted) {
    if (static_cast<int>(kept.size()) >= max_keep) break;
    bool suppressed = false;
    for (const Box& k : kept) {
      if (iou(b, k) > thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

// Scores anchors with the objectness map, decodes the top pre_nms_k, clips to
// the image, drops empty boxes, applies greedy NMS and maps the survivors to
// the feature grid. Never returns an empty list: falls back to one
// full-image box so the segmentation stream always receives gradient.
template <typename T>
std::vector<Box> select_proposals(const Tensor<T>& objectness, const Tensor<T>& deltas,
                                  const std::vector<Box>& anchors, const ProposalConfig& cfg) {
  const int n_scales = objectness.extent(0);
  const int feat_h = objectness.extent(1), feat_w = objectness.extent(2);
  const std::size_t n = anchors.size();
  if (n != static_cast<std::size_t>(n_scales) * feat_h * feat_w)
    throw std::invalid_argument("select_proposals: anchor count " + std::to_string(n) +
                                " does not match objectness " + shape_str(objectness.shape()));
  if (deltas.extent(0) != 4 * n_scales || deltas.extent(1) != feat_h ||
      deltas.extent(2) != feat_w)
    throw std::invalid_argument("select_proposals: deltas " + shape_str(deltas.shape()) +
                                " does not match objectness " + shape_str(objectness.shape()));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const T* scores = objectness.data();
  // Anchor index a = (i * feat_w + j) * n_scales + s; the [S, fh, fw] score
  // map stores anchor a at plane s, cell (i, j).
  auto score_of = [&](int a) {
    const int s = a % n_scales;
    const int cell = a / n_scales;
    return scores[static_cast<std::size_t>(s) * feat_h * feat_w + cell];
  };
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    const T sl = score_of(l), sr = score_of(r);
    if (sl != sr) return sl > sr;
    return l < r;
  });
  const int take = std::min<int>(cfg.pre_nms_k, static_cast<int>(n));

  std::vector<Box> candidates;
  for (int rank = 0; rank < take; ++rank) {
    const int a = order[static_cast<std::size_t>(rank)];
    const int s = a % n_scales;
    const int cell = a / n_scales;
    const int i = cell / feat_w, j = cell % feat_w;
    const BoxDelta d{static_cast<double>(deltas(4 * s + 0, i, j)),
                     static_cast<double>(deltas(4 * s + 1, i, j)),
                     static_cast<double>(deltas(4 * s + 2, i, j)),
                     static_cast<double>(deltas(4 * s + 3, i, j))};
    const Box b = decode_box(d, anchors[static_cast<std::size_t>(a)]);
    if (b.x1 < b.x0 || b.y1 < b.y0 || b.x1 < 0 || b.y1 < 0 || b.x0 >= cfg.img_w ||
        b.y0 >= cfg.img_h)
      continue;
    candidates.push_back(clip_box(b, cfg.img_h, cfg.img_w));
  }
  const std::vector<Box> kept = greedy_nms(candidates, cfg.nms_thresh, cfg.post_nms_k);

  std::vector<Box> out;
  out.reserve(kept.size());
  for (const Box& b : kept) out.push_back(image_box_to_feature(b, cfg.stride, feat_h, feat_w));
  if (out.empty()) out.push_back(Box{0, 0, feat_w - 1, feat_h - 1});
  return out;
}

}  // namespace roifcn
