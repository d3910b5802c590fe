#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "roifcn/net.hpp"

namespace roifcn {

// Checkpoint layout (little-endian throughout):
//   "RFCN" | u32 version=1 | u32 tensor_count
//   per tensor: u16 name_len | name | u8 rank | rank*u32 extents |
//               u8 dtype (0 = f32, 1 = f64) | raw elements
//   trailer: u64 iteration | 32-byte RNG state
// Tensors are the parameters followed by their momentum buffers (".m").

namespace detail {

template <typename T>
constexpr std::uint8_t dtype_code() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "checkpoints store 32- or 64-bit floats");
  return std::is_same_v<T, float> ? 0 : 1;
}

class CkptReader {
 public:
  CkptReader(const std::filesystem::path& path) : path_(path.string()), f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error("load_checkpoint: cannot open " + path_);
  }

  void read_raw(void* dst, std::size_t n) {
    f_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (f_.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("load_checkpoint: " + path_ + " truncated at offset " +
                               std::to_string(offset_ + static_cast<std::size_t>(f_.gcount())));
    offset_ += n;
  }

  template <typename U>
  U read_int() {
    U v;
    read_raw(&v, sizeof(U));
    return v;
  }

  std::size_t offset() const { return offset_; }

  bool at_eof() {
    f_.peek();
    return f_.eof();
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream f_;
  std::size_t offset_ = 0;
};

}  // namespace detail

template <typename T>
void save_checkpoint(const std::filesystem::path& path, TrainState<T>& state) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path.string());

  auto params = named_tensors(state.params);
  auto momentum = named_tensors(state.momentum);
  std::vector<std::pair<std::string, const Tensor<T>*>> entries;
  for (const auto& nt : params) entries.emplace_back(nt.name, nt.tensor);
  for (const auto& nt : momentum) entries.emplace_back(nt.name + ".m", nt.tensor);

  auto put_raw = [&f](const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  put_raw("RFCN", 4);
  const std::uint32_t version = 1;
  put_raw(&version, 4);
  const std::uint32_t count = static_cast<std::uint32_t>(entries.size());
  put_raw(&count, 4);
  for (const auto& [name, tensor] : entries) {
    const std::uint16_t name_len = static_cast<std::uint16_t>(name.size());
    put_raw(&name_len, 2);
    put_raw(name.data(), name.size());
    const std::uint8_t rank = static_cast<std::uint8_t>(tensor->rank());
    put_raw(&rank, 1);
    for (int i = 0; i < tensor->rank(); ++i) {
      const std::uint32_t e = static_cast<std::uint32_t>(tensor->extent(i));
      put_raw(&e, 4);
    }
    const std::uint8_t dtype = detail::dtype_code<T>();
    put_raw(&dtype, 1);
    put_raw(tensor->data(), tensor->numel() * sizeof(T));
  }
  const std::uint64_t iter = static_cast<std::uint64_t>(state.iteration);
  put_raw(&iter, 8);
  for (std::uint64_t word : state.rng.state()) put_raw(&word, 8);
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

template <typename T>
TrainState<T> load_checkpoint(const std::filesystem::path& path, const NetworkConfig& cfg) {
  detail::CkptReader r(path);

  char magic[4];
  r.read_raw(magic, 4);
  if (std::memcmp(magic, "RFCN", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + r.path() + " at offset 0");
  const std::uint32_t version = r.read_int<std::uint32_t>();
  if (version != 1)
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version) +
                             " in " + r.path() + " at offset 4");
  const std::uint32_t count = r.read_int<std::uint32_t>();

  TrainState<T> state;
  state.params = make_params<T>(cfg);
  state.momentum = make_params<T>(cfg);
  std::map<std::string, Tensor<T>*> by_name;
  for (const auto& nt : named_tensors(state.params)) by_name[nt.name] = nt.tensor;
  for (const auto& nt : named_tensors(state.momentum)) by_name[nt.name + ".m"] = nt.tensor;
  if (count != by_name.size())
    throw std::runtime_error("load_checkpoint: " + r.path() + " holds " + std::to_string(count) +
                             " tensors, config expects " + std::to_string(by_name.size()));

  for (std::uint32_t t = 0; t < count; ++t) {
    const std::size_t tensor_off = r.offset();
    const std::uint16_t name_len = r.read_int<std::uint16_t>();
    std::string name(name_len, '\0');
    r.read_raw(name.data(), name_len);
    const std::uint8_t rank = r.read_int<std::uint8_t>();
    std::vector<int> shape(rank);
    for (int i = 0; i < rank; ++i)
      shape[static_cast<std::size_t>(i)] = static_cast<int>(r.read_int<std::uint32_t>());
    const std::uint8_t dtype = r.read_int<std::uint8_t>();

    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("load_checkpoint: unexpected tensor '" + name + "' in " +
                               r.path() + " at offset " + std::to_string(tensor_off));
    Tensor<T>* dst = it->second;
    if (shape != dst->shape())
      throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " +
                               shape_str(shape) + ", config expects " + shape_str(dst->shape()));
    if (dtype != detail::dtype_code<T>())
      throw std::runtime_error("load_checkpoint: tensor '" + name + "' has dtype code " +
                               std::to_string(dtype) + ", expected " +
                               std::to_string(detail::dtype_code<T>()));
    r.read_raw(dst->data(), dst->numel() * sizeof(T));
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw std::runtime_error("load_checkpoint: tensor '" + by_name.begin()->first +
                             "' missing from " + r.path());

  state.iteration = static_cast<long long>(r.read_int<std::uint64_t>());
  std::array<std::uint64_t, 4> rng_state;
  for (auto& word : rng_state) word = r.read_int<std::uint64_t>();
  state.rng.set_state(rng_state);
  if (!r.at_eof())
    throw std::runtime_error("load_checkpoint: trailing bytes in " + r.path() + " at offset " +
                             std::to_string(r.offset()));
  return state;
}

}  // namespace roifcn
