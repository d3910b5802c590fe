#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roifcn/tensor.hpp"

namespace roifcn {

struct ConfusionCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ConfusionCounts confusion_counts(const Tensor<std::uint8_t>& pred,
                                        const Tensor<std::uint8_t>& gt) {
  if (pred.rank() != 2 || gt.rank() != 2 || pred.shape() != gt.shape())
    throw std::invalid_argument("confusion_counts: extent mismatch between pred " +
                                shape_str(pred.shape()) + " and gt " + shape_str(gt.shape()));
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

struct PrfDice {
  double precision = 0, recall = 0, dice = 0;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), dice = 2TP/(2TP+FP+FN).
// 0/0 cases score 0, except the all-empty agreement tp=fp=fn=0, which scores
// dice 1.
inline PrfDice prf_dice(const ConfusionCounts& c) {
  PrfDice r;
  r.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  r.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  const long long denom = 2 * c.tp + c.fp + c.fn;
  r.dice = denom > 0 ? 2.0 * c.tp / denom : 1.0;
  return r;
}

struct SliceMetrics {
  std::string slice_id;
  ConfusionCounts counts;
  PrfDice scores;

  bool gt_empty() const { return counts.tp + counts.fn == 0; }
};

struct Report {
  double mean_precision = 0, mean_recall = 0, mean_dice = 0;
  // Slices with positive ground truth, in ascending dice order.
  std::vector<SliceMetrics> curve;
};

// Unweighted mean over all slices (empty-gt slices included); the curve
// keeps only slices whose ground truth has positive pixels.
inline Report aggregate_report(const std::vector<SliceMetrics>& slices) {
  if (slices.empty()) throw std::invalid_argument("aggregate_report: empty result list");
  Report rep;
  for (const SliceMetrics& s : slices) {
    rep.mean_precision += s.scores.precision;
    rep.mean_recall += s.scores.recall;
    rep.mean_dice += s.scores.dice;
    if (!s.gt_empty()) rep.curve.push_back(s);
  }
  const double n = static_cast<double>(slices.size());
  rep.mean_precision /= n;
  rep.mean_recall /= n;
  rep.mean_dice /= n;
  std::stable_sort(rep.curve.begin(), rep.curve.end(),
                   [](const SliceMetrics& a, const SliceMetrics& b) {
                     return a.scores.dice < b.scores.dice;
                   });
  return rep;
}

inline void write_report_csv(const std::filesystem::path& path,
                             const std::vector<SliceMetrics>& slices, const Report& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_report_csv: cannot open " + path.string());
  f << "# empty-gt slices score dice 1 when the prediction is empty too; they enter the mean "
       "but not the curve file\n";
  f << "slice_id,precision,recall,dice\n";
  char buf[128];
  for (const SliceMetrics& s : slices) {
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f\n", s.scores.precision, s.scores.recall,
                  s.scores.dice);
    f << s.slice_id << buf;
  }
  std::snprintf(buf, sizeof(buf), "#mean,%.6f,%.6f,%.6f\n", rep.mean_precision, rep.mean_recall,
                rep.mean_dice);
  f << buf;
  if (!f) throw std::runtime_error("write_report_csv: write failed for " + path.string());
}

inline void write_curve_csv(const std::filesystem::path& path, const Report& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_curve_csv: cannot open " + path.string());
  f << "rank,slice_id,dice\n";
  char buf[64];
  for (std::size_t i = 0; i < rep.curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), ",%.6f\n", rep.curve[i].scores.dice);
    f << i << "," << rep.curve[i].slice_id << buf;
  }
  if (!f) throw std::runtime_error("write_curve_csv: write failed for " + path.string());
}

}  // namespace roifcn
