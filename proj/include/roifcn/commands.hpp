#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "roifcn/bench.hpp"
#include "roifcn/checkpoint.hpp"
#include "roifcn/data.hpp"
#include "roifcn/errors.hpp"
#include "roifcn/gradcheck.hpp"
#include "roifcn/metrics.hpp"
#include "roifcn/net.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/run_config.hpp"

namespace roifcn {

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void shuffle_indices(std::vector<int>& order, Rng& rng) {
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
}

inline std::ofstream open_text_output(const std::filesystem::path& path, const char* what) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(std::string(what) + ": cannot write " + path.string());
  return f;
}

}  // namespace detail

// Generates train/ and test/ PGM pairs plus one manifest per split. Each
// sample draws from its own stream seeded by run_seed XOR its global index
// (test indices continue after train), so every file is a pure function of
// (n_train, n_test, size, seed) and splits never share a stream.
inline int cmd_gen_data(const std::filesystem::path& out_dir, int n_train, int n_test, int h,
                        int w, std::uint64_t seed, std::ostream& log) {
  if (n_train < 0 || n_test < 0)
    throw std::invalid_argument("gen-data: sample counts must be >= 0");
  std::filesystem::create_directories(out_dir / "train");
  std::filesystem::create_directories(out_dir / "test");
  const auto write_split = [&](const std::string& split, int n, int first_global_index) {
    std::vector<std::pair<std::string, std::string>> rel;
    for (int i = 0; i < n; ++i) {
      char img[32], msk[32];
      std::snprintf(img, sizeof img, "img_%04d.pgm", i);
      std::snprintf(msk, sizeof msk, "msk_%04d.pgm", i);
      Rng rng(seed ^ static_cast<std::uint64_t>(first_global_index + i));
      const Sample s = generate_sample(rng, h, w);
      write_pgm(out_dir / split / img, image_to_bytes(s.image));
      write_pgm(out_dir / split / msk, mask_to_bytes(s.gt_mask));
      rel.emplace_back(split + "/" + img, split + "/" + msk);
    }
    write_manifest(out_dir / (split + ".manifest"), rel);
  };
  write_split("train", n_train, 0);
  write_split("test", n_test, n_train);
  std::ofstream echo = detail::open_text_output(out_dir / "gen-data.config", "gen-data");
  echo << "train = " << n_train << "\n"
       << "test = " << n_test << "\n"
       << "size = " << h << "x" << w << "\n"
       << "seed = " << seed << "\n";
  log << "gen-data: wrote " << n_train << " train and " << n_test << " test samples under "
      << out_dir.string() << "\n";
  return 0;
}

// Trains from scratch for the configured number of iterations over a seeded,
// per-epoch reshuffled sample order. Writes the checkpoint, a loss log CSV
// and the resolved config next to them.
inline int cmd_train(const std::filesystem::path& data_dir, const RunConfig& run,
                     const std::filesystem::path& out_ckpt, std::ostream& log) {
  const NetworkConfig& cfg = run.net;
  write_resolved_config(run, out_ckpt.string() + ".config");

  const std::vector<ManifestEntry> entries = load_manifest(data_dir / "train.manifest");
  if (entries.empty() && cfg.iterations > 0)
    throw std::invalid_argument("train: train.manifest lists no samples");
  std::vector<Sample> samples;
  samples.reserve(entries.size());
  for (const ManifestEntry& e : entries) samples.push_back(load_sample(e));

  const std::vector<Box> anchors =
      generate_anchors(cfg.feat_h(), cfg.feat_w(), NetworkConfig::kStride, cfg.scales);
  TrainState<float> state = init_train_state<float>(cfg);

  std::ofstream loss_log =
      detail::open_text_output(out_ckpt.string() + ".loss.csv", "train");
  loss_log << "iter,l_reg,l_cls,l_seg,total,lr\n";

  const int n = static_cast<int>(samples.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    if (iter % n == 0) detail::shuffle_indices(order, state.rng);
    const Sample& sample = samples[static_cast<std::size_t>(order[iter % n])];
    const double lr = lr_at(cfg, state.iteration);
    const LossReport rep = train_step(sample, state, cfg, anchors);
    loss_log << iter << ',';
    if (rep.detection_enabled)
      loss_log << detail::csv_num(rep.l_reg) << ',' << detail::csv_num(rep.l_cls) << ',';
    else
      loss_log << ",,";
    loss_log << detail::csv_num(rep.l_seg) << ',' << detail::csv_num(rep.total) << ','
             << detail::csv_num(lr) << "\n";
  }
  if (!loss_log) throw std::runtime_error("train: writing loss log failed");

  save_checkpoint(out_ckpt, state);
  log << "train: " << cfg.iterations << " iterations done; checkpoint " << out_ckpt.string()
      << ", loss log " << out_ckpt.string() << ".loss.csv\n";
  return 0;
}

// Evaluates every test slice with the checkpointed model. The architecture is
// rebuilt from the resolved config written next to the checkpoint at training
// time; per-slice metrics and the sorted dice curve go to the two CSVs.
inline int cmd_eval(const std::filesystem::path& data_dir, const std::filesystem::path& model,
                    const std::filesystem::path& report_path,
                    const std::filesystem::path& curve_path, std::ostream& log) {
  const std::string sidecar = model.string() + ".config";
  if (!std::filesystem::exists(sidecar))
    throw std::invalid_argument("eval: missing resolved config " + sidecar +
                                " next to checkpoint");
  const RunConfig run = load_run_config(sidecar);
  const NetworkConfig& cfg = run.net;
  TrainState<float> state = load_checkpoint<float>(model, cfg);

  const std::vector<ManifestEntry> entries = load_manifest(data_dir / "test.manifest");
  if (entries.empty()) throw std::invalid_argument("eval: test.manifest lists no samples");
  const std::vector<Box> anchors =
      generate_anchors(cfg.feat_h(), cfg.feat_w(), NetworkConfig::kStride, cfg.scales);

  std::vector<SliceMetrics> slices;
  slices.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    const Sample s = load_sample(e);
    const ForwardCache<float> cache = forward(s.image, state.params, cfg, anchors);
    SliceMetrics m;
    m.slice_id = e.image_path.stem().string();
    m.counts = confusion_counts(predict_mask(cache), s.gt_mask);
    m.scores = prf_dice(m.counts);
    slices.push_back(std::move(m));
  }
  const Report rep = aggregate_report(slices);
  write_report_csv(report_path, slices, rep);
  write_curve_csv(curve_path, rep);
  write_resolved_config(run, report_path.string() + ".config");
  char dice[40];
  std::snprintf(dice, sizeof dice, "%.6f", rep.mean_dice);
  log << "eval: " << slices.size() << " slices, mean dice " << dice << "; report "
      << report_path.string() << ", curve " << curve_path.string() << "\n";
  return 0;
}

// Checks every parameter gradient against central finite differences on a
// tiny 16x16 configuration, always in 64-bit. Prints one line per tensor.
inline int cmd_gradcheck(std::uint64_t seed, std::ostream& log) {
  const GradcheckResult res = gradcheck_all(gradcheck_config(), seed);
  for (const GradcheckLayerResult& l : res.layers) {
    char line[96];
    std::snprintf(line, sizeof line, "%-24s max_rel_err %.3e %s", l.name.c_str(), l.max_rel,
                  l.max_rel < 1e-5 ? "ok" : "FAIL");
    log << line << "\n";
  }
  char tail[96];
  std::snprintf(tail, sizeof tail, "gradcheck %s (max %.3e over %zu tensors)",
                res.pass ? "PASS" : "FAIL", res.max_rel, res.layers.size());
  log << tail << "\n";
  return res.pass ? 0 : 1;
}

// Benchmarks image-wise masked convolution against the per-region baseline
// over a (size x roi-count) grid, asserting agreement before timing each cell.
inline int cmd_bench(const std::vector<int>& sizes, const std::vector<int>& roi_counts, int reps,
                     const std::filesystem::path& out_csv, std::ostream& log) {
  if (reps < 1) throw std::invalid_argument("bench: reps must be >= 1");
  for (int s : sizes)
    if (s < 4) throw std::invalid_argument("bench: sizes must be >= 4");
  for (int n : roi_counts)
    if (n < 0) throw std::invalid_argument("bench: roi counts must be >= 0");
  const std::vector<BenchRow> rows = bench_grid(sizes, roi_counts, reps, 42);
  std::ofstream f = detail::open_text_output(out_csv, "bench");
  f << "h,w,n_rois,coverage,t_imagewise_us,t_regionwise_us\n";
  for (const BenchRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%d,%d,%d,%.6f,%.3f,%.3f", r.h, r.w, r.n_rois, r.coverage,
                  r.t_imagewise_us, r.t_regionwise_us);
    f << line << "\n";
  }
  std::ofstream echo = detail::open_text_output(out_csv.string() + ".config", "bench");
  echo << "sizes = " << detail::int_list_str(sizes) << "\n"
       << "rois = " << detail::int_list_str(roi_counts) << "\n"
       << "reps = " << reps << "\n";
  log << "bench: wrote " << rows.size() << " rows to " << out_csv.string() << "\n";
  return 0;
}

// ---- Command-line front end ----

namespace detail {

inline const char* usage_text() {
  return
      "usage: roifcn <command> [flags]\n"
      "\n"
      "commands:\n"
      "  gen-data   --out DIR --train N --test N --size HxW --seed S\n"
      "             generate a synthetic dataset (PGM pairs + manifests)\n"
      "  train      --data DIR --config FILE --out CKPT [--no-detection] [--seed S]\n"
      "             train from scratch; writes checkpoint, loss CSV, resolved config\n"
      "  eval       --data DIR --model CKPT --report CSV --curve CSV\n"
      "             evaluate on the test split; writes metrics and dice-curve CSVs\n"
      "  gradcheck  [--seed S]\n"
      "             finite-difference check of every parameter gradient (64-bit)\n"
      "  bench      --sizes LIST --rois LIST --reps N --out CSV\n"
      "             time image-wise vs per-region masked convolution\n"
      "\n"
      "config files use one 'key = value' per line; '#' starts a comment.\n"
      "exit codes: 0 success, 1 usage or input error, 2 numerical failure.\n";
}

struct ArgMap {
  std::map<std::string, std::string> values;
  std::set<std::string> switches;
};

inline ArgMap parse_args(const std::vector<std::string>& args, std::size_t start,
                         const std::set<std::string>& value_flags,
                         const std::set<std::string>& switch_flags, const std::string& cmd) {
  ArgMap m;
  for (std::size_t i = start; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (switch_flags.count(a)) {
      if (!m.switches.insert(a).second)
        throw std::invalid_argument(cmd + ": duplicate flag " + a);
    } else if (value_flags.count(a)) {
      if (i + 1 >= args.size())
        throw std::invalid_argument(cmd + ": flag " + a + " needs a value");
      if (!m.values.emplace(a, args[i + 1]).second)
        throw std::invalid_argument(cmd + ": duplicate flag " + a);
      ++i;
    } else {
      throw std::invalid_argument(cmd + ": unknown argument '" + a + "'");
    }
  }
  return m;
}

inline const std::string& require_flag(const ArgMap& m, const std::string& cmd,
                                       const std::string& flag) {
  const auto it = m.values.find(flag);
  if (it == m.values.end())
    throw std::invalid_argument(cmd + ": missing required flag " + flag);
  return it->second;
}

inline int parse_flag_int(const ArgMap& m, const std::string& cmd, const std::string& flag) {
  return static_cast<int>(parse_int_field(cmd + " " + flag, require_flag(m, cmd, flag)));
}

inline std::pair<int, int> parse_size(const std::string& cmd, const std::string& v) {
  const std::size_t x = v.find('x');
  if (x == std::string::npos)
    throw std::invalid_argument(cmd + ": --size needs HxW, got '" + v + "'");
  const int h = static_cast<int>(parse_int_field(cmd + " --size", v.substr(0, x)));
  const int w = static_cast<int>(parse_int_field(cmd + " --size", v.substr(x + 1)));
  return {h, w};
}

}  // namespace detail

// Parses argv and dispatches. All diagnostics go to err; normal progress to
// out. Exceptions map to the exit-code contract (1 input, 2 numerical).
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using detail::parse_args;
  using detail::require_flag;
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    if (args.empty()) {
      err << detail::usage_text();
      return 1;
    }
    const std::string cmd = args[0];
    if (cmd == "help" || cmd == "-h" || cmd == "--help") {
      out << detail::usage_text();
      return 0;
    }
    if (cmd == "gen-data") {
      const auto m = parse_args(args, 1, {"--out", "--train", "--test", "--size", "--seed"}, {},
                                cmd);
      const auto [h, w] = detail::parse_size(cmd, require_flag(m, cmd, "--size"));
      return cmd_gen_data(require_flag(m, cmd, "--out"),
                          detail::parse_flag_int(m, cmd, "--train"),
                          detail::parse_flag_int(m, cmd, "--test"), h, w,
                          static_cast<std::uint64_t>(detail::parse_int_field(
                              "gen-data --seed", require_flag(m, cmd, "--seed"))),
                          out);
    }
    if (cmd == "train") {
      const auto m = parse_args(args, 1, {"--data", "--config", "--out", "--seed"},
                                {"--no-detection"}, cmd);
      RunConfig run = load_run_config(require_flag(m, cmd, "--config"));
      if (m.switches.count("--no-detection")) run.net.detection_enabled = false;
      if (const auto it = m.values.find("--seed"); it != m.values.end())
        run.net.seed =
            static_cast<std::uint64_t>(detail::parse_int_field("train --seed", it->second));
      return cmd_train(require_flag(m, cmd, "--data"), run, require_flag(m, cmd, "--out"), out);
    }
    if (cmd == "eval") {
      const auto m = parse_args(args, 1, {"--data", "--model", "--report", "--curve"}, {}, cmd);
      return cmd_eval(require_flag(m, cmd, "--data"), require_flag(m, cmd, "--model"),
                      require_flag(m, cmd, "--report"), require_flag(m, cmd, "--curve"), out);
    }
    if (cmd == "gradcheck") {
      const auto m = parse_args(args, 1, {"--seed"}, {}, cmd);
      std::uint64_t seed = 1;
      if (const auto it = m.values.find("--seed"); it != m.values.end())
        seed = static_cast<std::uint64_t>(detail::parse_int_field("gradcheck --seed", it->second));
      return cmd_gradcheck(seed, out);
    }
    if (cmd == "bench") {
      const auto m = parse_args(args, 1, {"--sizes", "--rois", "--reps", "--out"}, {}, cmd);
      return cmd_bench(
          detail::parse_int_list_field("bench --sizes", require_flag(m, cmd, "--sizes")),
          detail::parse_int_list_field("bench --rois", require_flag(m, cmd, "--rois")),
          detail::parse_flag_int(m, cmd, "--reps"), require_flag(m, cmd, "--out"), out);
    }
    throw std::invalid_argument("unknown command '" + cmd + "' (try 'roifcn help')");
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace roifcn
