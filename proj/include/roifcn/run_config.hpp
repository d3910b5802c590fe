#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roifcn/net.hpp"

namespace roifcn {

// Full description of a training or evaluation run: the network and optimizer
// settings plus an experiment name. Loaded from a "key = value" text file;
// every run echoes the resolved values back out so the run can be reproduced
// byte for byte.
struct RunConfig {
  std::string name = "run";
  NetworkConfig net;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline long long parse_int_field(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + v + "'");
  return out;
}

inline double parse_double_field(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + v + "'");
  return out;
}

inline bool parse_bool_field(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' needs on/off, got '" + v + "'");
}

inline std::vector<int> parse_int_list_field(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_int_field(key, item)));
  }
  if (out.empty())
    throw std::invalid_argument("config: key '" + key + "' needs a comma-separated list, got '" +
                                v + "'");
  return out;
}

inline std::string int_list_str(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace detail

// Applies one "key = value" assignment. Unknown keys throw so that a typo in
// a config file fails the run instead of silently using a default.
inline void apply_config_key(RunConfig& rc, const std::string& key, const std::string& value) {
  using detail::parse_bool_field;
  using detail::parse_double_field;
  using detail::parse_int_field;
  using detail::parse_int_list_field;
  NetworkConfig& n = rc.net;
  if (key == "name") {
    rc.name = value;
  } else if (key == "img_h") {
    n.img_h = static_cast<int>(parse_int_field(key, value));
  } else if (key == "img_w") {
    n.img_w = static_cast<int>(parse_int_field(key, value));
  } else if (key == "c1") {
    n.c1 = static_cast<int>(parse_int_field(key, value));
  } else if (key == "c2") {
    n.c2 = static_cast<int>(parse_int_field(key, value));
  } else if (key == "c3") {
    n.c3 = static_cast<int>(parse_int_field(key, value));
  } else if (key == "c4") {
    n.c4 = static_cast<int>(parse_int_field(key, value));
  } else if (key == "c5") {
    n.c5 = static_cast<int>(parse_int_field(key, value));
  } else if (key == "roi_layers") {
    n.roi_layers = static_cast<int>(parse_int_field(key, value));
  } else if (key == "anchor_scales") {
    n.scales = parse_int_list_field(key, value);
  } else if (key == "pre_nms_k") {
    n.pre_nms_k = static_cast<int>(parse_int_field(key, value));
  } else if (key == "post_nms_k") {
    n.post_nms_k = static_cast<int>(parse_int_field(key, value));
  } else if (key == "nms_thresh") {
    n.nms_thresh = parse_double_field(key, value);
  } else if (key == "iou_hi") {
    n.iou_hi = parse_double_field(key, value);
  } else if (key == "iou_lo") {
    n.iou_lo = parse_double_field(key, value);
  } else if (key == "max_samples") {
    n.max_samples = static_cast<int>(parse_int_field(key, value));
  } else if (key == "detection") {
    n.detection_enabled = parse_bool_field(key, value);
  } else if (key == "lr") {
    n.lr = parse_double_field(key, value);
  } else if (key == "momentum") {
    n.momentum = parse_double_field(key, value);
  } else if (key == "weight_decay") {
    n.weight_decay = parse_double_field(key, value);
  } else if (key == "lr_step_iters") {
    n.lr_step_iters = static_cast<int>(parse_int_field(key, value));
  } else if (key == "lr_gamma") {
    n.lr_gamma = parse_double_field(key, value);
  } else if (key == "iterations") {
    n.iterations = static_cast<int>(parse_int_field(key, value));
  } else if (key == "seed") {
    n.seed = static_cast<std::uint64_t>(parse_int_field(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline void parse_config_text(RunConfig& rc, std::istream& in, const std::string& origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
    try {
      apply_config_key(rc, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  RunConfig rc;
  parse_config_text(rc, in, path);
  rc.net.validate();
  return rc;
}

namespace detail {

// Shortest decimal form that round-trips through parse_double_field.
inline std::string double_str(double v) {
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream out;
    out.precision(prec);
    out << v;
    if (std::stod(out.str()) == v) return out.str();
  }
  return std::to_string(v);
}

}  // namespace detail

// Serializes every field in a fixed order. The output parses back to an
// identical RunConfig, which is what makes the echo file a full reproduction
// recipe for the run.
inline std::string resolved_config_text(const RunConfig& rc) {
  const NetworkConfig& n = rc.net;
  std::ostringstream out;
  out << "name = " << rc.name << "\n";
  out << "img_h = " << n.img_h << "\n";
  out << "img_w = " << n.img_w << "\n";
  out << "c1 = " << n.c1 << "\n";
  out << "c2 = " << n.c2 << "\n";
  out << "c3 = " << n.c3 << "\n";
  out << "c4 = " << n.c4 << "\n";
  out << "c5 = " << n.c5 << "\n";
  out << "roi_layers = " << n.roi_layers << "\n";
  out << "anchor_scales = " << detail::int_list_str(n.scales) << "\n";
  out << "pre_nms_k = " << n.pre_nms_k << "\n";
  out << "post_nms_k = " << n.post_nms_k << "\n";
  out << "nms_thresh = " << detail::double_str(n.nms_thresh) << "\n";
  out << "iou_hi = " << detail::double_str(n.iou_hi) << "\n";
  out << "iou_lo = " << detail::double_str(n.iou_lo) << "\n";
  out << "max_samples = " << n.max_samples << "\n";
  out << "detection = " << (n.detection_enabled ? "on" : "off") << "\n";
  out << "lr = " << detail::double_str(n.lr) << "\n";
  out << "momentum = " << detail::double_str(n.momentum) << "\n";
  out << "weight_decay = " << detail::double_str(n.weight_decay) << "\n";
  out << "lr_step_iters = " << n.lr_step_iters << "\n";
  out << "lr_gamma = " << detail::double_str(n.lr_gamma) << "\n";
  out << "iterations = " << n.iterations << "\n";
  out << "seed = " << n.seed << "\n";
  return out.str();
}

inline void write_resolved_config(const RunConfig& rc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  out << resolved_config_text(rc);
}

}  // namespace roifcn
