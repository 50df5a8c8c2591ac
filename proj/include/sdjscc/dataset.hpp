#pragma once

// IMGD dataset files (little-endian):
//   "IMGD" | u32 count | u32 height | u32 width | u32 channels
//   | count x u16 labels | count*height*width*channels u8 pixels (row-major,
//   channel-last)
// A sidecar "<file>.meta" holds key=value lines, at least num_classes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sdjscc/tensor.hpp"

namespace sdjscc {

struct Dataset {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::uint16_t> labels;
  std::vector<std::uint8_t> pixels;

  static constexpr std::size_t kHeaderBytes = 20;

  void validate() const;
  std::size_t image_bytes() const { return height * width * channels; }

  // [B,C,H,W] in [0,1] for the given image indices.
  template <typename T>
  Tensor<T> batch(std::span<const std::size_t> indices) const;
  template <typename T>
  Tensor<T> range(std::size_t begin, std::size_t end) const;
  std::vector<std::size_t> labels_of(std::span<const std::size_t> indices) const;

  std::vector<std::uint8_t> to_bytes() const;
  // num_classes is not part of the binary; callers fill it from the sidecar.
  static Dataset from_bytes(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);

  bool operator==(const Dataset&) const = default;
};

struct ShapesConfig {
  std::size_t num_per_class = 500;  // training images per class
  std::size_t classes = 4;
  std::size_t size = 32;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

// Procedural shapes: per class `num_per_class` training images plus a quarter
// as many test images (80/20 split), random colours, position, scale and a
// small rotation over a lightly noised background.
DatasetSplit generate_shapes(const ShapesConfig& config);

const std::vector<std::string>& shape_names();

}  // namespace sdjscc
