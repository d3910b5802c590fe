#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "roifcn/net.hpp"

namespace roifcn {

struct GradcheckLayerResult {
  std::string name;
  double max_rel = 0;
};

struct GradcheckResult {
  std::vector<GradcheckLayerResult> layers;
  double max_rel = 0;
  bool pass = false;
};

// Small everything: 16x16 input, thin channel plan, two anchor scales.
inline NetworkConfig gradcheck_config() {
  NetworkConfig cfg;
  cfg.img_h = cfg.img_w = 16;
  cfg.c1 = 4;
  cfg.c2 = 6;
  cfg.c3 = 8;
  cfg.c4 = 8;
  cfg.c5 = 4;
  cfg.scales = {6, 10};
  cfg.pre_nms_k = 8;
  cfg.post_nms_k = 3;
  cfg.max_samples = 16;
  cfg.detection_enabled = true;
  return cfg;
}

// Uniform-noise image with two small foreground components, so every loss
// term (box regression, objectness, masked segmentation) is exercised.
inline Sample make_gradcheck_sample(Rng& rng, int h, int w) {
  Sample s;
  s.image = Tensor<float>({1, h, w});
  for (std::size_t i = 0; i < s.image.numel(); ++i)
    s.image[i] = static_cast<float>(rng.uniform());
  s.gt_mask = Tensor<std::uint8_t>({h, w});
  for (int y = 3; y <= 4; ++y)
    for (int x = 4; x <= 6; ++x) s.gt_mask(y, x) = 1;
  s.gt_mask(h - 6, w - 5) = 1;
  s.gt_boxes = mask_to_boxes(s.gt_mask);
  return s;
}

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

// Checks every parameter gradient of the total loss against central finite
// differences with step 1e-6. The FD evaluations re-run the forward pass
// under the gates recorded at the base point (see FrozenGates) and accumulate
// in extended precision, so the reference differences the same smooth
// function backward differentiates, without drowning tiny gradients in
// rounding noise. `sabotage_index`, when >= 0, corrupts that analytic
// gradient element so tests can confirm the harness catches wrong gradients.
inline GradcheckResult gradcheck_all(const NetworkConfig& cfg, std::uint64_t seed,
                                     long long sabotage_index = -1) {
  cfg.validate();
  Rng rng(seed);
  NetParams<double> params = init_params<double>(cfg, rng);
  const Sample sample = make_gradcheck_sample(rng, cfg.img_h, cfg.img_w);
  const Tensor<double> image = sample.image.cast<double>();
  const std::vector<Box> anchors =
      generate_anchors(cfg.feat_h(), cfg.feat_w(), NetworkConfig::kStride, cfg.scales);

  const ForwardCache<double> cache = forward(image, params, cfg, anchors);
  AnchorTargets targets = assign_anchor_targets(anchors, sample.gt_boxes, cfg.iou_hi, cfg.iou_lo,
                                                cfg.max_samples, rng);
  NetParams<double> grads =
      backward(image, params, cfg, cache, sample.gt_mask, &targets);
  const FrozenGates gates = extract_gates(cache);

  const Tensor<long double> image_ld = sample.image.cast<long double>();
  auto eval = [&](const NetParams<double>& p) -> long double {
    const NetParams<long double> pl = cast_params<long double>(p);
    const ForwardCache<long double> c = forward(image_ld, pl, cfg, anchors, &gates);
    return compute_losses(c, sample.gt_mask, &targets, cfg).total;
  };

  const double h = 1e-6;
  GradcheckResult result;
  auto param_tensors = named_tensors(params);
  auto grad_tensors = named_tensors(grads);
  long long flat = 0;
  for (std::size_t t = 0; t < param_tensors.size(); ++t) {
    Tensor<double>& pt = *param_tensors[t].tensor;
    const Tensor<double>& gt = *grad_tensors[t].tensor;
    GradcheckLayerResult layer{param_tensors[t].name, 0.0};
    for (std::size_t i = 0; i < pt.numel(); ++i, ++flat) {
      const double saved = pt[i];
      pt[i] = saved + h;
      const long double lp = eval(params);
      pt[i] = saved - h;
      const long double lm = eval(params);
      pt[i] = saved;
      const double numeric = static_cast<double>((lp - lm) / (2.0L * static_cast<long double>(h)));
      double analytic = gt[i];
      if (flat == sabotage_index) analytic = 3.0 * numeric + 1.0;
      layer.max_rel = std::max(layer.max_rel, rel_err(analytic, numeric));
    }
    result.max_rel = std::max(result.max_rel, layer.max_rel);
    result.layers.push_back(std::move(layer));
  }
  result.pass = result.max_rel < 1e-5;
  return result;
}

}  // namespace roifcn
