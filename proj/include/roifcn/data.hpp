#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roifcn/box.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/tensor.hpp"

namespace roifcn {

struct Sample {
  Tensor<float> image;            // 1xHxW, values in [0,1]
  Tensor<std::uint8_t> gt_mask;   // HxW, values in {0,1}
  std::vector<Box> gt_boxes;      // image grid, tight component boxes
};

// 8-connected component labeling; one tight inclusive box per component,
// ordered by first pixel in row-major scan order.
inline std::vector<Box> mask_to_boxes(const Tensor<std::uint8_t>& mask) {
  if (mask.rank() != 2)
    throw std::invalid_argument("mask_to_boxes: mask must be rank 2, got " +
                                shape_str(mask.shape()));
  const int h = mask.extent(0), w = mask.extent(1);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(h) * w, 0);
  std::vector<Box> boxes;
  std::vector<int> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t start = static_cast<std::size_t>(sy) * w + sx;
      if (!mask[start] || seen[start]) continue;
      Box b{sx, sy, sx, sy};
      seen[start] = 1;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cy = cur / w, cx = cur % w;
        b.x0 = std::min(b.x0, cx);
        b.x1 = std::max(b.x1, cx);
        b.y0 = std::min(b.y0, cy);
        b.y1 = std::max(b.y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t noff = static_cast<std::size_t>(ny) * w + nx;
            if (!mask[noff] || seen[noff]) continue;
            seen[noff] = 1;
            stack.push_back(static_cast<int>(noff));
          }
        }
      }
      boxes.push_back(b);
    }
  }
  return boxes;
}

struct GenParams {
  int n_arcs_min = 1, n_arcs_max = 2;
  double radius_frac_min = 0.10, radius_frac_max = 0.22;  // fraction of min(H,W)
  double span_min_deg = 50, span_max_deg = 130;
  int thickness_min = 1, thickness_max = 3;
  double arc_value_min = 0.75, arc_value_max = 0.95;
  int n_blobs_min = 2, n_blobs_max = 4;
  double blob_sigma_frac_min = 0.08, blob_sigma_frac_max = 0.18;
  double blob_amp_min = 0.15, blob_amp_max = 0.35;
  double noise_amp = 0.30;
  double pos_frac_min = 0.001, pos_frac_max = 0.01;
  int max_attempts = 100;
};

// Thin bright circular-arc strokes on a dark background with low-frequency
// blob distractors and multiplicative speckle-like noise. Redraws until the
// positive-pixel fraction falls inside the configured band.
inline Sample generate_sample(Rng& rng, int h, int w, const GenParams& gp = {}) {
  if (h < 32 || w < 32)
    throw std::invalid_argument("generate_sample: extents must be >= 32, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  const double pi = 3.14159265358979323846;
  const double scale = std::min(h, w);
  for (int attempt = 0; attempt < gp.max_attempts; ++attempt) {
    Sample s;
    s.image = Tensor<float>({1, h, w});
    s.gt_mask = Tensor<std::uint8_t>({h, w});

    const int n_arcs = rng.uniform_int(gp.n_arcs_min, gp.n_arcs_max);
    for (int arc = 0; arc < n_arcs; ++arc) {
      const double cx = rng.uniform(0.25 * w, 0.75 * w);
      const double cy = rng.uniform(0.25 * h, 0.75 * h);
      const double radius = rng.uniform(gp.radius_frac_min, gp.radius_frac_max) * scale;
      const double theta0 = rng.uniform(0.0, 2.0 * pi);
      const double span = rng.uniform(gp.span_min_deg, gp.span_max_deg) * pi / 180.0;
      const int thickness = rng.uniform_int(gp.thickness_min, gp.thickness_max);
      const float value = static_cast<float>(rng.uniform(gp.arc_value_min, gp.arc_value_max));

      const double r2 = 0.5 * thickness;
      const int steps = std::max(8, static_cast<int>(std::ceil(radius * span * 4.0)));
      for (int t = 0; t <= steps; ++t) {
        const double theta = theta0 + span * t / steps;
        const double px = cx + radius * std::cos(theta);
        const double py = cy + radius * std::sin(theta);
        const int y_lo = std::max(0, static_cast<int>(std::floor(py - r2)));
        const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(py + r2)));
        const int x_lo = std::max(0, static_cast<int>(std::floor(px - r2)));
        const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(px + r2)));
        for (int yy = y_lo; yy <= y_hi; ++yy) {
          for (int xx = x_lo; xx <= x_hi; ++xx) {
            const double dx = xx - px, dy = yy - py;
            if (dx * dx + dy * dy > r2 * r2) continue;
            s.gt_mask(yy, xx) = 1;
            s.image(0, yy, xx) = std::max(s.image(0, yy, xx), value);
          }
        }
      }
    }

    std::size_t positives = 0;
    for (std::size_t i = 0; i < s.gt_mask.numel(); ++i) positives += s.gt_mask[i];
    const double frac = static_cast<double>(positives) / static_cast<double>(h * w);
    if (frac < gp.pos_frac_min || frac > gp.pos_frac_max) continue;

    const int n_blobs = rng.uniform_int(gp.n_blobs_min, gp.n_blobs_max);
    for (int blob = 0; blob < n_blobs; ++blob) {
      const double bx = rng.uniform(0.0, w - 1.0);
      const double by = rng.uniform(0.0, h - 1.0);
      const double sigma = rng.uniform(gp.blob_sigma_frac_min, gp.blob_sigma_frac_max) * scale;
      const double amp = rng.uniform(gp.blob_amp_min, gp.blob_amp_max);
      const double inv = 1.0 / (2.0 * sigma * sigma);
      for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
          const double d2 = (xx - bx) * (xx - bx) + (yy - by) * (yy - by);
          s.image(0, yy, xx) += static_cast<float>(amp * std::exp(-d2 * inv));
        }
      }
    }

    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        const double n = rng.uniform(-gp.noise_amp, gp.noise_amp);
        const double v = s.image(0, yy, xx) * (1.0 + n);
        s.image(0, yy, xx) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }

    s.gt_boxes = mask_to_boxes(s.gt_mask);
    return s;
  }
  throw std::runtime_error("generate_sample: no draw hit the positive-fraction band in " +
                           std::to_string(gp.max_attempts) + " attempts");
}

// ---- PGM I/O (binary "P5", maxval 255) ----

inline std::uint8_t quantize_unit_to_byte(float v) {
  const float scaled = v * 255.0f + 0.5f;
  if (scaled <= 0.0f) return 0;
  if (scaled >= 255.0f) return 255;
  return static_cast<std::uint8_t>(scaled);
}

inline Tensor<std::uint8_t> image_to_bytes(const Tensor<float>& img) {
  if (img.rank() != 3 || img.extent(0) != 1)
    throw std::invalid_argument("image_to_bytes: image must be 1xHxW, got " +
                                shape_str(img.shape()));
  Tensor<std::uint8_t> out({img.extent(1), img.extent(2)});
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = quantize_unit_to_byte(img[i]);
  return out;
}

inline Tensor<float> bytes_to_image(const Tensor<std::uint8_t>& bytes) {
  Tensor<float> out({1, bytes.extent(0), bytes.extent(1)});
  for (std::size_t i = 0; i < bytes.numel(); ++i)
    out[i] = static_cast<float>(bytes[i]) / 255.0f;
  return out;
}

inline Tensor<std::uint8_t> mask_to_bytes(const Tensor<std::uint8_t>& mask) {
  Tensor<std::uint8_t> out(mask.shape());
  for (std::size_t i = 0; i < mask.numel(); ++i) out[i] = mask[i] ? 255 : 0;
  return out;
}

inline Tensor<std::uint8_t> bytes_to_mask(const Tensor<std::uint8_t>& bytes) {
  Tensor<std::uint8_t> out(bytes.shape());
  for (std::size_t i = 0; i < bytes.numel(); ++i) out[i] = bytes[i] > 127 ? 1 : 0;
  return out;
}

inline void write_pgm(const std::filesystem::path& path, const Tensor<std::uint8_t>& bytes) {
  if (bytes.rank() != 2)
    throw std::invalid_argument("write_pgm: expected rank-2 byte grid, got " +
                                shape_str(bytes.shape()));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path.string());
  f << "P5\n" << bytes.extent(1) << " " << bytes.extent(0) << "\n255\n";
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.numel()));
  if (!f) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

namespace detail {

inline long pgm_next_int(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comment lines between header tokens.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c))
    throw std::runtime_error("read_pgm: malformed header in " + path);
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("read_pgm: truncated header in " + path);
  return v;
}

}  // namespace detail

inline Tensor<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pgm: cannot open " + path.string());
  char magic[2] = {0, 0};
  f.read(magic, 2);
  if (!f || magic[0] != 'P' || magic[1] != '5')
    throw std::runtime_error("read_pgm: " + path.string() + " is not a binary PGM (P5)");
  const long w = detail::pgm_next_int(f, path.string());
  const long h = detail::pgm_next_int(f, path.string());
  const long maxval = detail::pgm_next_int(f, path.string());
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("read_pgm: unsupported header in " + path.string());
  // pgm_next_int consumed exactly one whitespace byte after maxval by
  // stopping at the first non-digit, so the raster starts here.
  Tensor<std::uint8_t> bytes({static_cast<int>(h), static_cast<int>(w)});
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.numel()));
  if (f.gcount() != static_cast<std::streamsize>(bytes.numel()))
    throw std::runtime_error("read_pgm: stated extents exceed body length in " + path.string());
  return bytes;
}

// ---- Manifests: one "image_path<TAB>mask_path" line, relative to the file ----

struct ManifestEntry {
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
};

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::string>>& rel_entries) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path.string());
  for (const auto& [img, msk] : rel_entries) f << img << "\t" << msk << "\n";
  if (!f) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_manifest: cannot open " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_manifest: missing tab separator in " + path.string() +
                               " line " + std::to_string(entries.size() + 1));
    ManifestEntry e;
    e.image_path = base / line.substr(0, tab);
    e.mask_path = base / line.substr(tab + 1);
    if (!std::filesystem::exists(e.image_path))
      throw std::runtime_error("load_manifest: missing file " + e.image_path.string());
    if (!std::filesystem::exists(e.mask_path))
      throw std::runtime_error("load_manifest: missing file " + e.mask_path.string());
    entries.push_back(std::move(e));
  }
  return entries;
}

inline Sample load_sample(const ManifestEntry& e) {
  Sample s;
  s.image = bytes_to_image(read_pgm(e.image_path));
  s.gt_mask = bytes_to_mask(read_pgm(e.mask_path));
  if (s.gt_mask.extent(0) != s.image.extent(1) || s.gt_mask.extent(1) != s.image.extent(2))
    throw std::runtime_error("load_sample: image " + e.image_path.string() + " and mask " +
                             e.mask_path.string() + " extents differ");
  s.gt_boxes = mask_to_boxes(s.gt_mask);
  return s;
}

}  // namespace roifcn
