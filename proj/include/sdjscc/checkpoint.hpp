#pragma once

// Checkpoint file layout (all integers little-endian):
//   "SDJC" | u32 version=1 | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 dtype (0=f32, 1=f64)
//               | u8 ndim | ndim x u32 dims | raw little-endian values
// Training metadata travels as three f64 scalar tensors named meta.stage,
// meta.step and meta.loss.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdjscc/layers.hpp"

namespace sdjscc {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

struct NamedTensor {
  std::string name;
  Shape shape;
  std::variant<std::vector<float>, std::vector<double>> values;

  DType dtype() const { return values.index() == 0 ? DType::f32 : DType::f64; }
};

struct CheckpointMeta {
  std::int64_t stage = 0;
  std::int64_t step = 0;
  double loss = 0.0;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<NamedTensor> tensors;
  CheckpointMeta meta;

  const NamedTensor* find(std::string_view name) const;

  std::vector<std::uint8_t> to_bytes() const;
  static Checkpoint from_bytes(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

template <typename T>
Checkpoint make_checkpoint(const ParameterList<T>& params, CheckpointMeta meta);

// Copies every parameter from the checkpoint by name. Missing names and shape
// mismatches raise ConfigError. Values are converted if the stored dtype
// differs from T.
template <typename T>
void load_parameters(const Checkpoint& ckpt, const ParameterList<T>& params);

// FNV-1a over raw bytes; used to fingerprint frozen weights.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

template <typename T>
std::uint64_t parameter_hash(const ParameterList<T>& params);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sdjscc
