#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "roifcn/box.hpp"
#include "roifcn/checkpoint.hpp"
#include "roifcn/data.hpp"
#include "roifcn/gradcheck.hpp"
#include "roifcn/layers.hpp"
#include "roifcn/loss.hpp"
#include "roifcn/metrics.hpp"
#include "roifcn/net.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/roi_conv.hpp"
#include "roifcn/rpn.hpp"
#include "roifcn/tensor.hpp"

namespace fs = std::filesystem;
using namespace roifcn;

namespace {

struct Gate {
  std::string cli;
  fs::path work;
  fs::path cli_log;
  int failures = 0;

  // Runs one CLI invocation, appending its output to the shared log.
  void run(const std::string& args) {
    const std::string cmd =
        "\"" + cli + "\" " + args + " >> \"" + cli_log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    const int rc = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    if (rc != 0)
      throw std::runtime_error("command '" + args + "' exited with code " + std::to_string(rc));
  }

  void criterion(int idx, const char* title, double time_limit_s,
                 const std::function<std::string()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
      detail = body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && time_limit_s > 0 && secs > time_limit_s) {
      ok = false;
      detail += " but exceeded the " + std::to_string(static_cast<int>(time_limit_s)) +
                " s budget";
    }
    failures += ok ? 0 : 1;
    std::printf("[%s] criterion %d, %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", idx, title,
                detail.c_str(), secs);
    std::fflush(stdout);
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double mean_dice_of(const fs::path& report) {
  std::istringstream in(read_file(report));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#mean,", 0) != 0) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) break;
    return std::stod(fields[3]);
  }
  throw std::runtime_error("no #mean row in " + report.string());
}

std::vector<double> loss_totals_of(const fs::path& csv) {
  std::istringstream in(read_file(csv));
  std::string line;
  if (!std::getline(in, line) || line.rfind("iter,", 0) != 0)
    throw std::runtime_error("missing header in " + csv.string());
  std::vector<double> totals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 6) throw std::runtime_error("malformed row in " + csv.string());
    totals.push_back(std::stod(fields[4]));
  }
  return totals;
}

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t n) {
  double s = 0;
  for (std::size_t i = from; i < from + n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

char fmt_buf[512];
template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(fmt_buf, sizeof fmt_buf, f, args...);
  return fmt_buf;
}

// ---- criterion 1: gradient correctness ----

std::string crit_gradients() {
  const GradcheckResult r = gradcheck_all(gradcheck_config(), 1);
  if (!r.pass)
    throw std::runtime_error(fmt("max relative gradient error %.3e is not < 1e-5", r.max_rel));
  return fmt("all %zu parameter tensors match finite differences, max rel err %.3e",
             r.layers.size(), r.max_rel);
}

// ---- criterion 2: masked conv equals dense conv times mask ----

template <typename T>
void check_masked_equals_dense(const Tensor<double>& x64, const ConvParams<double>& p64,
                               const RoiMask& mask, double tol, const char* label) {
  const Tensor<T> x = x64.cast<T>();
  ConvParams<T> p;
  p.kernel = p64.kernel.cast<T>();
  p.bias = p64.bias.cast<T>();
  p.stride = 1;
  p.padding = p64.padding;
  const Tensor<T> roi = roi_conv_forward(x, p, mask);
  const Tensor<T> dense = conv2d_forward(x, p);
  const int out_c = dense.extent(0), h = dense.extent(1), w = dense.extent(2);
  for (int oc = 0; oc < out_c; ++oc)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!mask.at(i, j)) {
          if (roi(oc, i, j) != T(0))
            throw std::runtime_error(fmt("%s: out-of-mask output %.17g is not exactly 0", label,
                                         static_cast<double>(roi(oc, i, j))));
          continue;
        }
        const double a = static_cast<double>(roi(oc, i, j));
        const double b = static_cast<double>(dense(oc, i, j));
        if (std::abs(a - b) > tol * std::max(1.0, std::abs(b)))
          throw std::runtime_error(
              fmt("%s: in-mask mismatch %.17g vs %.17g at (%d,%d,%d)", label, a, b, oc, i, j));
      }
}

std::string crit_oracle() {
  Rng rng(1234);
  for (int instance = 0; instance < 200; ++instance) {
    const int h = rng.uniform_int(1, 32), w = rng.uniform_int(1, 32);
    const int out_c = rng.uniform_int(1, 3);
    const int k = rng.uniform_int(0, 1) == 0 ? 1 : 3;
    Tensor<double> x({1, h, w});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1, 1);
    ConvParams<double> p;
    p.kernel = Tensor<double>({out_c, 1, k, k});
    p.bias = Tensor<double>({out_c});
    for (std::size_t i = 0; i < p.kernel.numel(); ++i) p.kernel[i] = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < p.bias.numel(); ++i) p.bias[i] = rng.uniform(-1, 1);
    p.stride = 1;
    p.padding = k / 2;
    std::vector<Box> boxes;
    const int n_boxes = rng.uniform_int(1, 4);
    for (int b = 0; b < n_boxes; ++b) {
      const int x0 = rng.uniform_int(0, w - 1), y0 = rng.uniform_int(0, h - 1);
      boxes.push_back(Box{x0, y0, rng.uniform_int(x0, w - 1), rng.uniform_int(y0, h - 1)});
    }
    const RoiMask mask = rasterize_rois(boxes, h, w);
    check_masked_equals_dense<double>(x, p, mask, 1e-12, "f64");
    check_masked_equals_dense<float>(x, p, mask, 1e-6, "f32");
  }
  return "200 randomized instances match dense-conv-times-mask in both precisions";
}

// ---- criterion 3: degenerate masks ----

std::string crit_degenerate() {
  Rng rng(99);
  int cases = 0;
  for (int h = 1; h <= 5; ++h) {
    for (int w = 1; w <= 5; ++w) {
      for (int in_c = 1; in_c <= 2; ++in_c) {
        for (int out_c = 1; out_c <= 2; ++out_c) {
          for (const int k : {1, 3}) {
            Tensor<double> x({in_c, h, w});
            for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1, 1);
            ConvParams<double> p;
            p.kernel = Tensor<double>({out_c, in_c, k, k});
            p.bias = Tensor<double>({out_c});
            for (std::size_t i = 0; i < p.kernel.numel(); ++i) p.kernel[i] = rng.uniform(-1, 1);
            for (std::size_t i = 0; i < p.bias.numel(); ++i) p.bias[i] = rng.uniform(-1, 1);
            p.stride = 1;
            p.padding = k / 2;
            Tensor<double> dy({out_c, h, w});
            for (std::size_t i = 0; i < dy.numel(); ++i) dy[i] = rng.uniform(-1, 1);

            RoiMask full(h, w);
            for (auto& v : full.grid) v = 1;
            const Tensor<double> yf = roi_conv_forward(x, p, full);
            const Tensor<double> yd = conv2d_forward(x, p);
            if (std::memcmp(yf.data(), yd.data(), yd.numel() * sizeof(double)) != 0)
              throw std::runtime_error(fmt("full mask forward not bit-identical at %dx%d", h, w));
            const ConvGrads<double> gf = roi_conv_backward(x, p, full, dy);
            const ConvGrads<double> gd = conv2d_backward(x, p, dy);
            if (std::memcmp(gf.dx.data(), gd.dx.data(), gd.dx.numel() * sizeof(double)) != 0 ||
                std::memcmp(gf.dkernel.data(), gd.dkernel.data(),
                            gd.dkernel.numel() * sizeof(double)) != 0 ||
                std::memcmp(gf.dbias.data(), gd.dbias.data(),
                            gd.dbias.numel() * sizeof(double)) != 0)
              throw std::runtime_error(fmt("full mask backward not bit-identical at %dx%d", h, w));

            const RoiMask empty(h, w);
            const Tensor<double> ye = roi_conv_forward(x, p, empty);
            for (std::size_t i = 0; i < ye.numel(); ++i)
              if (ye[i] != 0.0) throw std::runtime_error("empty mask output not zero");
            const ConvGrads<double> ge = roi_conv_backward(x, p, empty, dy);
            for (std::size_t i = 0; i < ge.dx.numel(); ++i)
              if (ge.dx[i] != 0.0) throw std::runtime_error("empty mask dx not zero");
            for (std::size_t i = 0; i < ge.dkernel.numel(); ++i)
              if (ge.dkernel[i] != 0.0) throw std::runtime_error("empty mask dkernel not zero");
            for (std::size_t i = 0; i < ge.dbias.numel(); ++i)
              if (ge.dbias[i] != 0.0) throw std::runtime_error("empty mask dbias not zero");

            Tensor<double> scores({2, h, w});
            Tensor<std::uint8_t> gt({h, w});
            for (std::size_t i = 0; i < scores.numel(); ++i) scores[i] = rng.uniform(-2, 2);
            for (std::size_t i = 0; i < gt.numel(); ++i) gt[i] = rng.uniform_int(0, 1);
            if (masked_seg_loss(scores, gt, empty) != 0.0)
              throw std::runtime_error("empty mask segmentation loss not zero");
            ++cases;
          }
        }
      }
    }
  }
  return fmt("%d exhaustive shape/channel/kernel cases reduce exactly", cases);
}

// ---- criteria 4 and 5: detection benefit and training sanity ----

void write_acceptance_config(const fs::path& path, int iterations) {
  std::ofstream f(path, std::ios::binary);
  f << "name = acceptance\n"
    << "img_h = 64\nimg_w = 64\n"
    << "c1 = 8\nc2 = 16\nc3 = 32\nc4 = 32\nc5 = 16\n"
    << "roi_layers = 1\n"
    << "anchor_scales = 6,10,16\n"
    << "pre_nms_k = 12\npost_nms_k = 4\nnms_thresh = 0.7\n"
    << "iou_hi = 0.7\niou_lo = 0.3\nmax_samples = 32\n"
    << "lr = 0.001\nmomentum = 0.9\nweight_decay = 0.0005\n"
    << "lr_step_iters = 1500\nlr_gamma = 0.1\n"
    << "iterations = " << iterations << "\n";
}

std::string crit_detection_benefit(Gate& gate, std::vector<fs::path>& loss_csvs) {
  const fs::path data = gate.work / "dataset";
  gate.run("gen-data --out \"" + data.string() + "\" --train 200 --test 50 --size 64x64 --seed 100");
  const fs::path config = gate.work / "train.config";
  write_acceptance_config(config, 3000);

  double gaps[3];
  double mean_gap = 0;
  int wins = 0;
  std::string gap_text;
  for (int s = 1; s <= 3; ++s) {
    const std::string tag = std::to_string(s);
    const fs::path on = gate.work / ("on_" + tag + ".ckpt");
    const fs::path off = gate.work / ("off_" + tag + ".ckpt");
    gate.run("train --data \"" + data.string() + "\" --config \"" + config.string() +
             "\" --out \"" + on.string() + "\" --seed " + tag);
    gate.run("train --data \"" + data.string() + "\" --config \"" + config.string() +
             "\" --out \"" + off.string() + "\" --no-detection --seed " + tag);
    const fs::path on_rep = gate.work / ("on_" + tag + ".report.csv");
    const fs::path off_rep = gate.work / ("off_" + tag + ".report.csv");
    gate.run("eval --data \"" + data.string() + "\" --model \"" + on.string() + "\" --report \"" +
             on_rep.string() + "\" --curve \"" + (gate.work / ("on_" + tag + ".curve.csv")).string() +
             "\"");
    gate.run("eval --data \"" + data.string() + "\" --model \"" + off.string() +
             "\" --report \"" + off_rep.string() + "\" --curve \"" +
             (gate.work / ("off_" + tag + ".curve.csv")).string() + "\"");
    const double dice_on = mean_dice_of(on_rep);
    const double dice_off = mean_dice_of(off_rep);
    gaps[s - 1] = dice_on - dice_off;
    mean_gap += gaps[s - 1] / 3.0;
    wins += gaps[s - 1] >= 0.05;
    gap_text += fmt("%sseed %d: %.3f vs %.3f (gap %+.3f)", s == 1 ? "" : ", ", s, dice_on,
                    dice_off, gaps[s - 1]);
    loss_csvs.push_back(fs::path(on.string() + ".loss.csv"));
    loss_csvs.push_back(fs::path(off.string() + ".loss.csv"));
  }
  const std::string summary = gap_text + fmt(", mean gap %+.3f", mean_gap);
  if (wins < 2)
    throw std::runtime_error("gap >= 0.05 in only " + std::to_string(wins) + " of 3 seeds; " +
                             summary);
  if (!(mean_gap > 0)) throw std::runtime_error("mean gap not positive; " + summary);
  return summary;
}

std::string crit_loss_halves(const std::vector<fs::path>& loss_csvs) {
  if (loss_csvs.empty()) throw std::runtime_error("no loss logs (criterion 4 did not run)");
  std::string detail;
  for (const fs::path& csv : loss_csvs) {
    const std::vector<double> totals = loss_totals_of(csv);
    if (totals.size() < 200)
      throw std::runtime_error(csv.filename().string() + " has fewer than 200 rows");
    const double head = mean_of(totals, 0, 100);
    const double tail = mean_of(totals, totals.size() - 100, 100);
    if (!(tail < 0.5 * head))
      throw std::runtime_error(fmt("%s: final-100 mean %.4f is not < 50%% of first-100 mean %.4f",
                                   csv.filename().string().c_str(), tail, head));
    detail += fmt("%s%.2f->%.2f", detail.empty() ? "" : ", ", head, tail);
  }
  return "final-100 vs first-100 total-loss means: " + detail;
}

// ---- criterion 6: metrics exactness ----

std::string crit_metrics() {
  const PrfDice a = prf_dice(ConfusionCounts{2, 1, 1, 0});
  if (std::abs(a.precision - 2.0 / 3.0) > 1e-9 || std::abs(a.recall - 2.0 / 3.0) > 1e-9 ||
      std::abs(a.dice - 4.0 / 6.0) > 1e-9)
    throw std::runtime_error("tp=2,fp=1,fn=1 case off by more than 1e-9");
  const PrfDice b = prf_dice(ConfusionCounts{5, 0, 0, 9});
  if (b.precision != 1.0 || b.recall != 1.0 || b.dice != 1.0)
    throw std::runtime_error("perfect case is not (1,1,1)");
  const PrfDice c = prf_dice(ConfusionCounts{0, 0, 4, 9});
  if (c.precision != 0.0 || c.recall != 0.0 || c.dice != 0.0)
    throw std::runtime_error("all-background case is not (0,0,0)");

  std::vector<SliceMetrics> slices;
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    SliceMetrics s;
    s.slice_id = "s" + std::to_string(i);
    const bool empty_gt = i % 5 == 0;
    s.counts = ConfusionCounts{empty_gt ? 0 : rng.uniform_int(0, 9), rng.uniform_int(0, 5),
                               empty_gt ? 0 : rng.uniform_int(1, 5), 10};
    s.scores = prf_dice(s.counts);
    slices.push_back(s);
  }
  const Report rep = aggregate_report(slices);
  for (const SliceMetrics& s : rep.curve)
    if (s.gt_empty()) throw std::runtime_error("curve contains an empty-gt slice");
  for (std::size_t i = 1; i < rep.curve.size(); ++i)
    if (rep.curve[i - 1].scores.dice > rep.curve[i].scores.dice)
      throw std::runtime_error("sorted dice curve decreases");
  return fmt("hand cases exact to 1e-9; curve keeps %zu of %zu slices, non-decreasing",
             rep.curve.size(), slices.size());
}

// ---- criterion 7: RPN suite ----

std::string crit_rpn() {
  const Box a{0, 0, 3, 3}, b{2, 2, 5, 5};
  long long inter = 0, uni = 0;
  for (int y = -2; y < 10; ++y)
    for (int x = -2; x < 10; ++x) {
      const bool in_a = a.contains(x, y), in_b = b.contains(x, y);
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  if (iou(a, b) != static_cast<double>(inter) / static_cast<double>(uni) ||
      iou(a, b) != 4.0 / 28.0)
    throw std::runtime_error("IoU((0,0,3,3),(2,2,5,5)) does not equal the rasterized 4/28");

  Rng rng(4321);
  for (int t = 0; t < 1000; ++t) {
    const int ax0 = rng.uniform_int(0, 48), ay0 = rng.uniform_int(0, 48);
    const Box anchor{ax0, ay0, ax0 + rng.uniform_int(0, 23), ay0 + rng.uniform_int(0, 23)};
    const int gx0 = rng.uniform_int(0, 48), gy0 = rng.uniform_int(0, 48);
    const Box gt{gx0, gy0, gx0 + rng.uniform_int(0, 23), gy0 + rng.uniform_int(0, 23)};
    const Box back = decode_box(encode_box(gt, anchor), anchor);
    if (!(back == gt)) throw std::runtime_error(fmt("round-trip failed on pair %d", t));
  }

  for (int t = 0; t < 50; ++t) {
    std::vector<Box> boxes;
    for (int i = 0; i < 25; ++i) {
      const int x0 = rng.uniform_int(0, 40), y0 = rng.uniform_int(0, 40);
      boxes.push_back(Box{x0, y0, x0 + rng.uniform_int(0, 15), y0 + rng.uniform_int(0, 15)});
    }
    const std::vector<Box> kept = greedy_nms(boxes, 0.7, 25);
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        if (iou(kept[i], kept[j]) > 0.7)
          throw std::runtime_error("NMS output pair exceeds the IoU threshold");
  }

  const std::vector<Box> anchors = generate_anchors(16, 16, 4, {6, 10, 16});
  for (int scene = 0; scene < 100; ++scene) {
    std::vector<Box> gts;
    const int n_gt = rng.uniform_int(1, 3);
    for (int g = 0; g < n_gt; ++g) {
      const int side = rng.uniform_int(3, 20);
      const int x0 = rng.uniform_int(0, 63 - side), y0 = rng.uniform_int(0, 63 - side);
      gts.push_back(Box{x0, y0, x0 + side - 1, y0 + side - 1});
    }
    const AnchorTargets t = assign_anchor_targets(anchors, gts, 0.7, 0.3, 32, rng);
    std::vector<bool> covered(gts.size(), false);
    for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
      if (t.label[ai] != AnchorLabel::kPositive) continue;
      for (std::size_t g = 0; g < gts.size(); ++g)
        if (iou(anchors[ai], gts[g]) > 0) covered[g] = true;
    }
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (!covered[g])
        throw std::runtime_error(fmt("scene %d: gt box %zu got no positive anchor", scene, g));
  }
  return "IoU oracle, 1000 round-trips, NMS pairwise bound and 100-scene coverage all hold";
}

// ---- criterion 8: benchmark correctness gate ----

std::string crit_bench(Gate& gate) {
  const fs::path csv = gate.work / "bench.csv";
  gate.run("bench --sizes 16,32,64 --rois 1,4,8 --reps 3 --out \"" + csv.string() + "\"");
  std::istringstream in(read_file(csv));
  std::string line;
  if (!std::getline(in, line) || line != "h,w,n_rois,coverage,t_imagewise_us,t_regionwise_us")
    throw std::runtime_error("bench CSV header is wrong");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  if (rows < 9) throw std::runtime_error(fmt("bench CSV has %d rows, expected the 3x3 grid", rows));
  return fmt("agreement gate passed and the CSV holds a %d-cell grid", rows);
}

// ---- criterion 9: determinism and persistence ----

std::string crit_determinism(Gate& gate) {
  const fs::path data = gate.work / "det9_data";
  gate.run("gen-data --out \"" + data.string() + "\" --train 8 --test 4 --size 64x64 --seed 500");
  const fs::path config = gate.work / "det9.config";
  write_acceptance_config(config, 60);
  for (const char* tag : {"a", "b"}) {
    const fs::path ckpt = gate.work / (std::string("det9_") + tag + ".ckpt");
    gate.run("train --data \"" + data.string() + "\" --config \"" + config.string() +
             "\" --out \"" + ckpt.string() + "\" --seed 9");
    gate.run("eval --data \"" + data.string() + "\" --model \"" + ckpt.string() +
             "\" --report \"" + (gate.work / (std::string("det9_") + tag + ".report.csv")).string() +
             "\" --curve \"" + (gate.work / (std::string("det9_") + tag + ".curve.csv")).string() +
             "\"");
  }
  if (read_file(gate.work / "det9_a.ckpt.loss.csv") != read_file(gate.work / "det9_b.ckpt.loss.csv"))
    throw std::runtime_error("loss logs of identical runs differ");
  if (read_file(gate.work / "det9_a.ckpt") != read_file(gate.work / "det9_b.ckpt"))
    throw std::runtime_error("checkpoints of identical runs differ");
  if (read_file(gate.work / "det9_a.report.csv") != read_file(gate.work / "det9_b.report.csv") ||
      read_file(gate.work / "det9_a.curve.csv") != read_file(gate.work / "det9_b.curve.csv"))
    throw std::runtime_error("metric CSVs of identical runs differ");

  NetworkConfig cfg;
  cfg.img_h = cfg.img_w = 32;
  cfg.c1 = 2;
  cfg.c2 = 3;
  cfg.c3 = 4;
  cfg.c4 = 4;
  cfg.c5 = 3;
  cfg.scales = {6};
  cfg.pre_nms_k = 6;
  cfg.post_nms_k = 2;
  cfg.max_samples = 8;
  cfg.seed = 12;
  TrainState<float> state = init_train_state<float>(cfg);
  Rng data_rng(77);
  const Sample sample = generate_sample(data_rng, 32, 32);
  const std::vector<Box> anchors =
      generate_anchors(cfg.feat_h(), cfg.feat_w(), NetworkConfig::kStride, cfg.scales);
  train_step(sample, state, cfg, anchors);
  train_step(sample, state, cfg, anchors);
  const ForwardCache<float> before = forward(sample.image, state.params, cfg, anchors);
  const fs::path ckpt = gate.work / "det9_roundtrip.ckpt";
  save_checkpoint(ckpt, state);
  TrainState<float> loaded = load_checkpoint<float>(ckpt, cfg);
  const ForwardCache<float> after = forward(sample.image, loaded.params, cfg, anchors);
  if (before.scores.shape() != after.scores.shape() ||
      std::memcmp(before.scores.data(), after.scores.data(),
                  before.scores.numel() * sizeof(float)) != 0)
    throw std::runtime_error("forward after checkpoint round-trip is not bit-identical");
  return "identical runs are byte-identical and checkpoint round-trip preserves the forward pass";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <cli-binary> <work-dir>\n");
    return 64;
  }
  Gate gate;
  gate.cli = argv[1];
  gate.work = argv[2];
  std::error_code ec;
  fs::remove_all(gate.work, ec);
  fs::create_directories(gate.work);
  gate.cli_log = gate.work / "cli.log";

  std::vector<fs::path> loss_csvs;
  gate.criterion(1, "gradient correctness", 30, crit_gradients);
  gate.criterion(2, "masked-conv oracle equivalence", 5, crit_oracle);
  gate.criterion(3, "degenerate mask reductions", 0, crit_degenerate);
  gate.criterion(4, "detection benefit on the synthetic task", 1200,
                 [&] { return crit_detection_benefit(gate, loss_csvs); });
  gate.criterion(5, "training loss halves", 0, [&] { return crit_loss_halves(loss_csvs); });
  gate.criterion(6, "metrics exactness", 0, crit_metrics);
  gate.criterion(7, "rpn unit suite", 0, crit_rpn);
  gate.criterion(8, "benchmark correctness gate", 0, [&] { return crit_bench(gate); });
  gate.criterion(9, "determinism and persistence", 0, [&] { return crit_determinism(gate); });

  if (gate.failures == 0)
    std::printf("acceptance: all 9 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", gate.failures);
  return gate.failures;
}
