#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roifcn/data.hpp"
#include "roifcn/errors.hpp"
#include "roifcn/layers.hpp"
#include "roifcn/loss.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/roi_conv.hpp"
#include "roifcn/rpn.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

struct NetworkConfig {
  // Two 2x2/stride-2 pools; the feature stride and upsampling factor.
  static constexpr int kStride = 4;

  int img_h = 64, img_w = 64;
  // Backbone channels (c1, c2, c3), ROI conv output (c4), upsampler output (c5).
  int c1 = 8, c2 = 16, c3 = 32, c4 = 32, c5 = 16;
  int roi_layers = 1;
  std::vector<int> scales = {6, 10, 16};
  int pre_nms_k = 12;
  int post_nms_k = 4;
  double nms_thresh = 0.7;
  double iou_hi = 0.7, iou_lo = 0.3;
  int max_samples = 32;
  bool detection_enabled = true;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int lr_step_iters = 1500;
  double lr_gamma = 0.1;
  int iterations = 3000;
  std::uint64_t seed = 1;

  int feat_h() const { return img_h / kStride; }
  int feat_w() const { return img_w / kStride; }

  void validate() const {
    if (img_h < kStride || img_w < kStride || img_h % kStride != 0 || img_w % kStride != 0)
      throw std::invalid_argument("config: image extents " + std::to_string(img_h) + "x" +
                                  std::to_string(img_w) + " must be positive multiples of " +
                                  std::to_string(kStride));
    if (c1 < 1 || c2 < 1 || c3 < 1 || c4 < 1 || c5 < 1)
      throw std::invalid_argument("config: channel counts must be >= 1");
    if (roi_layers < 1) throw std::invalid_argument("config: roi_layers must be >= 1");
    if (scales.empty()) throw std::invalid_argument("config: scales must be non-empty");
    for (int s : scales)
      if (s < 1) throw std::invalid_argument("config: anchor scales must be >= 1");
    if (pre_nms_k < 1 || post_nms_k < 1)
      throw std::invalid_argument("config: pre_nms_k and post_nms_k must be >= 1");
    if (!(nms_thresh >= 0.0 && nms_thresh <= 1.0))
      throw std::invalid_argument("config: nms_thresh must lie in [0,1]");
    if (!(iou_lo < iou_hi))
      throw std::invalid_argument("config: requires iou_lo < iou_hi");
    if (max_samples < 1) throw std::invalid_argument("config: max_samples must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("config: lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("config: momentum must lie in [0,1)");
    if (weight_decay < 0) throw std::invalid_argument("config: weight_decay must be >= 0");
    if (lr_step_iters < 1) throw std::invalid_argument("config: lr_step_iters must be >= 1");
    if (!(lr_gamma > 0)) throw std::invalid_argument("config: lr_gamma must be > 0");
    if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  }

  ProposalConfig proposal_config() const {
    return ProposalConfig{pre_nms_k, post_nms_k, nms_thresh, img_h, img_w, kStride};
  }
};

template <typename T>
struct NetParams {
  ConvParams<T> conv1, conv2, conv3;
  ConvParams<T> rpn_conv, rpn_obj, rpn_delta;
  std::vector<ConvParams<T>> roi_convs;
  ConvParams<T> upsample;  // transposed conv, kernel [c4, c5, 2*stride, 2*stride]
  ConvParams<T> score;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
  bool rpn;  // parameters the detection-off ablation must not touch
};

// Fixed enumeration order; checkpoints, SGD updates and gradcheck reports all
// follow it.
template <typename T>
std::vector<NamedTensor<T>> named_tensors(NetParams<T>& p) {
  std::vector<NamedTensor<T>> v;
  auto add = [&v](const std::string& name, ConvParams<T>& cp, bool rpn) {
    v.push_back({name + ".kernel", &cp.kernel, rpn});
    v.push_back({name + ".bias", &cp.bias, rpn});
  };
  add("conv1", p.conv1, false);
  add("conv2", p.conv2, false);
  add("conv3", p.conv3, false);
  add("rpn_conv", p.rpn_conv, true);
  add("rpn_obj", p.rpn_obj, true);
  add("rpn_delta", p.rpn_delta, true);
  for (std::size_t i = 0; i < p.roi_convs.size(); ++i)
    add("roi_conv" + std::to_string(i + 1), p.roi_convs[i], false);
  add("upsample", p.upsample, false);
  add("score", p.score, false);
  return v;
}

namespace detail {

template <typename T>
ConvParams<T> make_conv(int out_c, int in_c, int k, int stride, int padding) {
  ConvParams<T> p;
  p.kernel = Tensor<T>({out_c, in_c, k, k});
  p.bias = Tensor<T>({out_c});
  p.stride = stride;
  p.padding = padding;
  return p;
}

template <typename T>
ConvParams<T> make_transpose_conv(int in_c, int out_c, int stride) {
  ConvParams<T> p;
  p.kernel = Tensor<T>({in_c, out_c, 2 * stride, 2 * stride});
  p.bias = Tensor<T>({out_c});
  p.stride = stride;
  p.padding = stride / 2;
  return p;
}

template <typename T>
void glorot_fill(Tensor<T>& kernel, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (std::size_t i = 0; i < kernel.numel(); ++i)
    kernel[i] = static_cast<T>(rng.uniform(-a, a));
}

// FCN-style bilinear upsampling weights; input channel ci feeds output
// channel ci % out_c, scaled so the per-output DC gain stays ~1.
template <typename T>
void bilinear_fill(Tensor<T>& kernel) {
  const int in_c = kernel.extent(0), out_c = kernel.extent(1), k = kernel.extent(2);
  const double factor = (k + 1) / 2;
  const double center = k % 2 == 1 ? factor - 1.0 : factor - 0.5;
  const double scale = static_cast<double>(out_c) / in_c;
  for (int ci = 0; ci < in_c; ++ci) {
    const int co = ci % out_c;
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double f =
            (1.0 - std::abs(a - center) / factor) * (1.0 - std::abs(b - center) / factor);
        kernel(ci, co, a, b) = static_cast<T>(f * scale);
      }
    }
  }
}

}  // namespace detail

// Shapes only, all zeros; used for gradient and momentum buffers.
template <typename T>
NetParams<T> make_params(const NetworkConfig& cfg) {
  NetParams<T> p;
  p.conv1 = detail::make_conv<T>(cfg.c1, 1, 3, 1, 1);
  p.conv2 = detail::make_conv<T>(cfg.c2, cfg.c1, 3, 1, 1);
  p.conv3 = detail::make_conv<T>(cfg.c3, cfg.c2, 3, 1, 1);
  p.rpn_conv = detail::make_conv<T>(cfg.c3, cfg.c3, 3, 1, 1);
  p.rpn_obj = detail::make_conv<T>(static_cast<int>(cfg.scales.size()), cfg.c3, 1, 1, 0);
  p.rpn_delta = detail::make_conv<T>(4 * static_cast<int>(cfg.scales.size()), cfg.c3, 1, 1, 0);
  p.roi_convs.resize(static_cast<std::size_t>(cfg.roi_layers));
  for (int l = 0; l < cfg.roi_layers; ++l)
    p.roi_convs[static_cast<std::size_t>(l)] =
        detail::make_conv<T>(l + 1 == cfg.roi_layers ? cfg.c4 : cfg.c3, cfg.c3, 3, 1, 1);
  p.upsample = detail::make_transpose_conv<T>(cfg.c4, cfg.c5, NetworkConfig::kStride);
  p.score = detail::make_conv<T>(2, cfg.c5, 1, 1, 0);
  return p;
}

// Glorot-uniform kernels in a fixed draw order, zero biases, bilinear
// upsampler (no draws).
template <typename T>
NetParams<T> init_params(const NetworkConfig& cfg, Rng& rng) {
  NetParams<T> p = make_params<T>(cfg);
  auto glorot = [&rng](ConvParams<T>& cp) {
    const int k = cp.kernel.extent(2);
    detail::glorot_fill(cp.kernel, cp.kernel.extent(1) * k * k, cp.kernel.extent(0) * k * k, rng);
  };
  glorot(p.conv1);
  glorot(p.conv2);
  glorot(p.conv3);
  glorot(p.rpn_conv);
  glorot(p.rpn_obj);
  glorot(p.rpn_delta);
  for (auto& rc : p.roi_convs) glorot(rc);
  detail::bilinear_fill(p.upsample.kernel);
  glorot(p.score);
  return p;
}

template <typename U, typename T>
NetParams<U> cast_params(const NetParams<T>& p) {
  NetParams<U> out;
  auto cast_conv = [](const ConvParams<T>& c) {
    ConvParams<U> o;
    o.kernel = c.kernel.template cast<U>();
    o.bias = c.bias.template cast<U>();
    o.stride = c.stride;
    o.padding = c.padding;
    return o;
  };
  out.conv1 = cast_conv(p.conv1);
  out.conv2 = cast_conv(p.conv2);
  out.conv3 = cast_conv(p.conv3);
  out.rpn_conv = cast_conv(p.rpn_conv);
  out.rpn_obj = cast_conv(p.rpn_obj);
  out.rpn_delta = cast_conv(p.rpn_delta);
  out.roi_convs.reserve(p.roi_convs.size());
  for (const auto& rc : p.roi_convs) out.roi_convs.push_back(cast_conv(rc));
  out.upsample = cast_conv(p.upsample);
  out.score = cast_conv(p.score);
  return out;
}

// Discrete choices of one forward pass (ReLU activity, pool argmaxes, the
// ROI mask). Holding them fixed makes the loss a smooth function of the
// parameters, which is exactly the function backward differentiates; the
// finite-difference harness re-evaluates under these frozen gates.
struct FrozenGates {
  Tensor<std::uint8_t> g1, g2, g3, gr;
  std::vector<Tensor<std::uint8_t>> groi;
  Tensor<int> pool1_idx, pool2_idx;
  std::vector<int> pool1_shape, pool2_shape;
  RoiMask mask;
};

template <typename T>
struct ForwardCache {
  Tensor<T> c1_pre, a1;
  Tensor<T> c2_pre, a2;
  MaxPool2Result<T> pool1;
  Tensor<T> c3_pre, a3;
  MaxPool2Result<T> pool2;  // pool2.y is the shared feature map
  Tensor<T> r_pre, r;
  Tensor<T> obj, dlt;           // empty when detection is off
  std::vector<Box> proposals;   // feature grid
  RoiMask mask;                 // feature grid
  std::vector<Tensor<T>> roi_pre;
  std::vector<Tensor<T>> roi_act;
  Tensor<T> up;
  Tensor<T> scores;  // 2 x img_h x img_w
};

template <typename T>
FrozenGates extract_gates(const ForwardCache<T>& cache) {
  FrozenGates g;
  g.g1 = relu_gates(cache.c1_pre);
  g.g2 = relu_gates(cache.c2_pre);
  g.g3 = relu_gates(cache.c3_pre);
  if (!cache.r_pre.empty()) g.gr = relu_gates(cache.r_pre);
  g.groi.reserve(cache.roi_pre.size());
  for (const auto& pre : cache.roi_pre) g.groi.push_back(relu_gates(pre));
  g.pool1_idx = cache.pool1.argmax;
  g.pool1_shape = cache.pool1.y.shape();
  g.pool2_idx = cache.pool2.argmax;
  g.pool2_shape = cache.pool2.y.shape();
  g.mask = cache.mask;
  return g;
}

// Backbone -> RPN head -> proposals -> ROI conv stream -> upsampler -> score
// map. With `frozen` set, ReLU gates, pool argmaxes and the ROI mask are
// taken from a previous pass instead of being recomputed, and proposal
// selection is skipped. With detection off, the RPN head is skipped and the
// mask is all ones.
template <typename T>
ForwardCache<T> forward(const Tensor<T>& image, const NetParams<T>& params,
                        const NetworkConfig& cfg, const std::vector<Box>& anchors,
                        const FrozenGates* frozen = nullptr) {
  if (image.rank() != 3 || image.extent(0) != 1 || image.extent(1) != cfg.img_h ||
      image.extent(2) != cfg.img_w)
    throw std::invalid_argument("forward: image " + shape_str(image.shape()) +
                                " does not match configured 1x" + std::to_string(cfg.img_h) +
                                "x" + std::to_string(cfg.img_w));
  ForwardCache<T> c;
  c.c1_pre = conv2d_forward(image, params.conv1);
  c.a1 = frozen ? relu_with_gates(c.c1_pre, frozen->g1) : relu(c.c1_pre);
  c.c2_pre = conv2d_forward(c.a1, params.conv2);
  c.a2 = frozen ? relu_with_gates(c.c2_pre, frozen->g2) : relu(c.c2_pre);
  if (frozen) {
    c.pool1.y = maxpool2_take(c.a2, frozen->pool1_idx, frozen->pool1_shape);
    c.pool1.argmax = frozen->pool1_idx;
    c.pool1.input_shape = c.a2.shape();
  } else {
    c.pool1 = maxpool2(c.a2);
  }
  c.c3_pre = conv2d_forward(c.pool1.y, params.conv3);
  c.a3 = frozen ? relu_with_gates(c.c3_pre, frozen->g3) : relu(c.c3_pre);
  if (frozen) {
    c.pool2.y = maxpool2_take(c.a3, frozen->pool2_idx, frozen->pool2_shape);
    c.pool2.argmax = frozen->pool2_idx;
    c.pool2.input_shape = c.a3.shape();
  } else {
    c.pool2 = maxpool2(c.a3);
  }
  const Tensor<T>& feat = c.pool2.y;

  if (cfg.detection_enabled) {
    c.r_pre = conv2d_forward(feat, params.rpn_conv);
    c.r = frozen ? relu_with_gates(c.r_pre, frozen->gr) : relu(c.r_pre);
    c.obj = conv2d_forward(c.r, params.rpn_obj);
    c.dlt = conv2d_forward(c.r, params.rpn_delta);
    if (frozen) {
      c.mask = frozen->mask;
    } else {
      c.proposals = select_proposals(c.obj, c.dlt, anchors, cfg.proposal_config());
      c.mask = rasterize_rois(c.proposals, cfg.feat_h(), cfg.feat_w());
    }
  } else {
    c.mask = RoiMask(cfg.feat_h(), cfg.feat_w());
    for (auto& v : c.mask.grid) v = 1;
  }

  const Tensor<T>* in = &feat;
  c.roi_pre.reserve(params.roi_convs.size());
  c.roi_act.reserve(params.roi_convs.size());
  for (std::size_t l = 0; l < params.roi_convs.size(); ++l) {
    c.roi_pre.push_back(roi_conv_forward(*in, params.roi_convs[l], c.mask));
    c.roi_act.push_back(frozen ? relu_with_gates(c.roi_pre[l], frozen->groi[l])
                               : relu(c.roi_pre[l]));
    in = &c.roi_act[l];
  }
  c.up = conv_transpose2d_forward(*in, params.upsample);
  c.scores = conv2d_forward(c.up, params.score);
  return c;
}

template <typename T>
struct LossValues {
  T l_reg = T(0), l_cls = T(0), l_seg = T(0), total = T(0);
  long long n_inroi = 0;
};

template <typename T>
LossValues<T> compute_losses(const ForwardCache<T>& cache, const Tensor<std::uint8_t>& gt_mask,
                             const AnchorTargets* targets, const NetworkConfig& cfg) {
  LossValues<T> lv;
  const RoiMask img_mask = upscale_mask(cache.mask, NetworkConfig::kStride);
  lv.n_inroi = static_cast<long long>(img_mask.count());
  lv.l_seg = masked_seg_loss(cache.scores, gt_mask, img_mask);
  if (cfg.detection_enabled) {
    if (targets == nullptr)
      throw std::invalid_argument("compute_losses: detection enabled but no anchor targets");
    lv.l_reg = reg_loss(cache.dlt, *targets);
    lv.l_cls = objectness_loss(cache.obj, *targets);
  }
  lv.total = lv.l_reg + lv.l_cls + lv.l_seg;
  return lv;
}

// Gradients of the total loss with respect to every parameter, reusing
// NetParams as the container (stride/padding fields are irrelevant there).
// The ROI mask and the anchor targets are constants of the iteration: no
// gradient flows through proposal boxes.
template <typename T>
NetParams<T> backward(const Tensor<T>& image, const NetParams<T>& params,
                      const NetworkConfig& cfg, const ForwardCache<T>& cache,
                      const Tensor<std::uint8_t>& gt_mask, const AnchorTargets* targets) {
  NetParams<T> g = make_params<T>(cfg);

  const RoiMask img_mask = upscale_mask(cache.mask, NetworkConfig::kStride);
  const Tensor<T> dscores = masked_seg_loss_backward(cache.scores, gt_mask, img_mask);

  ConvGrads<T> sg = conv2d_backward(cache.up, params.score, dscores);
  g.score.kernel = std::move(sg.dkernel);
  g.score.bias = std::move(sg.dbias);

  const Tensor<T>& up_in = cache.roi_act.back();
  ConvGrads<T> ug = conv_transpose2d_backward(up_in, params.upsample, sg.dx);
  g.upsample.kernel = std::move(ug.dkernel);
  g.upsample.bias = std::move(ug.dbias);

  Tensor<T> dact = std::move(ug.dx);
  Tensor<T> dfeat;
  for (int l = static_cast<int>(params.roi_convs.size()) - 1; l >= 0; --l) {
    const Tensor<T> dpre = relu_backward(cache.roi_pre[static_cast<std::size_t>(l)], dact);
    const Tensor<T>& in = l == 0 ? cache.pool2.y : cache.roi_act[static_cast<std::size_t>(l - 1)];
    ConvGrads<T> rg = roi_conv_backward(in, params.roi_convs[static_cast<std::size_t>(l)],
                                        cache.mask, dpre);
    g.roi_convs[static_cast<std::size_t>(l)].kernel = std::move(rg.dkernel);
    g.roi_convs[static_cast<std::size_t>(l)].bias = std::move(rg.dbias);
    if (l == 0)
      dfeat = std::move(rg.dx);
    else
      dact = std::move(rg.dx);
  }

  if (cfg.detection_enabled) {
    if (targets == nullptr)
      throw std::invalid_argument("backward: detection enabled but no anchor targets");
    const Tensor<T> dobj = objectness_loss_backward(cache.obj, *targets);
    const Tensor<T> ddlt = reg_loss_backward(cache.dlt, *targets);
    ConvGrads<T> og = conv2d_backward(cache.r, params.rpn_obj, dobj);
    g.rpn_obj.kernel = std::move(og.dkernel);
    g.rpn_obj.bias = std::move(og.dbias);
    ConvGrads<T> dg = conv2d_backward(cache.r, params.rpn_delta, ddlt);
    g.rpn_delta.kernel = std::move(dg.dkernel);
    g.rpn_delta.bias = std::move(dg.dbias);
    Tensor<T> dr = std::move(og.dx);
    for (std::size_t i = 0; i < dr.numel(); ++i) dr[i] += dg.dx[i];
    const Tensor<T> dr_pre = relu_backward(cache.r_pre, dr);
    ConvGrads<T> cg = conv2d_backward(cache.pool2.y, params.rpn_conv, dr_pre);
    g.rpn_conv.kernel = std::move(cg.dkernel);
    g.rpn_conv.bias = std::move(cg.dbias);
    for (std::size_t i = 0; i < dfeat.numel(); ++i) dfeat[i] += cg.dx[i];
  }

  const Tensor<T> da3 = maxpool2_backward(cache.pool2, dfeat);
  const Tensor<T> dc3 = relu_backward(cache.c3_pre, da3);
  ConvGrads<T> g3 = conv2d_backward(cache.pool1.y, params.conv3, dc3);
  g.conv3.kernel = std::move(g3.dkernel);
  g.conv3.bias = std::move(g3.dbias);

  const Tensor<T> da2 = maxpool2_backward(cache.pool1, g3.dx);
  const Tensor<T> dc2 = relu_backward(cache.c2_pre, da2);
  ConvGrads<T> g2 = conv2d_backward(cache.a1, params.conv2, dc2);
  g.conv2.kernel = std::move(g2.dkernel);
  g.conv2.bias = std::move(g2.dbias);

  const Tensor<T> dc1 = relu_backward(cache.c1_pre, g2.dx);
  ConvGrads<T> g1 = conv2d_backward(image, params.conv1, dc1);
  g.conv1.kernel = std::move(g1.dkernel);
  g.conv1.bias = std::move(g1.dbias);

  return g;
}

template <typename T>
struct TrainState {
  NetParams<T> params;
  NetParams<T> momentum;
  long long iteration = 0;
  Rng rng;
};

template <typename T>
TrainState<T> init_train_state(const NetworkConfig& cfg) {
  TrainState<T> s;
  s.rng = Rng(cfg.seed);
  s.params = init_params<T>(cfg, s.rng);
  s.momentum = make_params<T>(cfg);
  return s;
}

inline double lr_at(const NetworkConfig& cfg, long long iter) {
  const long long k = iter / cfg.lr_step_iters;
  return cfg.lr * std::pow(cfg.lr_gamma, static_cast<double>(k));
}

// v <- momentum*v - lr*(grad + wd*param); param <- param + v. Weight decay
// applies uniformly to every updated tensor. With detection off, RPN
// parameters are left completely untouched.
template <typename T>
void sgd_step(TrainState<T>& state, NetParams<T>& grads, const NetworkConfig& cfg) {
  const T lr = static_cast<T>(lr_at(cfg, state.iteration));
  const T mu = static_cast<T>(cfg.momentum);
  const T wd = static_cast<T>(cfg.weight_decay);
  auto ps = named_tensors(state.params);
  auto vs = named_tensors(state.momentum);
  auto gs = named_tensors(grads);
  for (std::size_t t = 0; t < ps.size(); ++t) {
    if (!cfg.detection_enabled && ps[t].rpn) continue;
    Tensor<T>& p = *ps[t].tensor;
    Tensor<T>& v = *vs[t].tensor;
    const Tensor<T>& gr = *gs[t].tensor;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      v[i] = mu * v[i] - lr * (gr[i] + wd * p[i]);
      p[i] += v[i];
    }
  }
}

namespace detail {

template <typename T>
void throw_if_nonfinite(const Tensor<T>& t, const std::string& name) {
  for (std::size_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(static_cast<double>(t[i])))
      throw NumericalError("non-finite value in tensor " + name + " at element " +
                               std::to_string(i));
  }
}

}  // namespace detail

// One SGD iteration on one sample. Throws on non-finite losses or gradients,
// naming the first offending tensor.
template <typename T>
LossReport train_step(const Sample& sample, TrainState<T>& state, const NetworkConfig& cfg,
                      const std::vector<Box>& anchors) {
  const Tensor<T> image = sample.image.template cast<T>();
  ForwardCache<T> cache = forward(image, state.params, cfg, anchors);

  AnchorTargets targets;
  if (cfg.detection_enabled)
    targets = assign_anchor_targets(anchors, sample.gt_boxes, cfg.iou_hi, cfg.iou_lo,
                                    cfg.max_samples, state.rng);

  const LossValues<T> lv =
      compute_losses(cache, sample.gt_mask, cfg.detection_enabled ? &targets : nullptr, cfg);
  if (!std::isfinite(static_cast<double>(lv.l_reg)))
    throw NumericalError("non-finite value in tensor l_reg");
  if (!std::isfinite(static_cast<double>(lv.l_cls)))
    throw NumericalError("non-finite value in tensor l_cls");
  if (!std::isfinite(static_cast<double>(lv.l_seg)))
    throw NumericalError("non-finite value in tensor l_seg");

  NetParams<T> grads = backward(image, state.params, cfg, cache, sample.gt_mask,
                                cfg.detection_enabled ? &targets : nullptr);
  for (const auto& nt : named_tensors(grads)) detail::throw_if_nonfinite(*nt.tensor, nt.name);

  sgd_step(state, grads, cfg);
  state.iteration += 1;

  return total_loss(static_cast<double>(lv.l_reg), static_cast<double>(lv.l_cls),
                    static_cast<double>(lv.l_seg), targets.n_pos, targets.n_sampled, lv.n_inroi,
                    cfg.detection_enabled);
}

// Inference-time prediction: argmax of the score map, gated by the upscaled
// ROI mask (out-of-ROI pixels are background).
template <typename T>
Tensor<std::uint8_t> predict_mask(const ForwardCache<T>& cache) {
  const int h = cache.scores.extent(1), w = cache.scores.extent(2);
  const RoiMask img_mask = upscale_mask(cache.mask, NetworkConfig::kStride);
  Tensor<std::uint8_t> pred({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      pred(i, j) =
          img_mask.at(i, j) && cache.scores(1, i, j) > cache.scores(0, i, j) ? 1 : 0;
  return pred;
}

}  // namespace roifcn
