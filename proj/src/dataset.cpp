#include "sdjscc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "sdjscc/checkpoint.hpp"
#include "sdjscc/config.hpp"

namespace sdjscc {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

// Membership test in shape-local coordinates (radius-normalised, y down).
bool inside(std::size_t kind, double u, double v) {
  auto in_triangle = [](double u, double v, bool inverted) {
    if (inverted) v = -v;
    // Apex (0,-1), base corners (+-0.95, 0.75).
    if (v > 0.75) return false;
    const double half = 0.95 * (v + 1.0) / 1.75;
    return v >= -1.0 && std::abs(u) <= half;
  };
  const double au = std::abs(u), av = std::abs(v);
  switch (kind) {
    case 0: return u * u + v * v <= 1.0;                                    // circle
    case 1: return au <= 0.8 && av <= 0.8;                                  // square
    case 2: return in_triangle(u, v, false);                                // triangle
    case 3: return (au <= 0.3 && av <= 1.0) || (av <= 0.3 && au <= 1.0);    // cross
    case 4: { const double r = std::sqrt(u * u + v * v); return r >= 0.55 && r <= 1.0; }  // ring
    case 5: return au + av <= 1.0;                                          // diamond
    case 6: return au <= 1.0 && av <= 0.3;                                  // horizontal bar
    case 7: return au <= 0.3 && av <= 1.0;                                  // vertical bar
    case 8: {                                                               // x
      const double p = (u + v) * std::numbers::sqrt2 / 2, q = (u - v) * std::numbers::sqrt2 / 2;
      return (std::abs(p) <= 0.3 && std::abs(q) <= 1.0) || (std::abs(q) <= 0.3 && std::abs(p) <= 1.0);
    }
    case 9: { const double m = std::max(au, av); return m >= 0.5 && m <= 0.85; }  // hollow square
    case 10: return in_triangle(u, v, true);                                 // inverted triangle
    case 11: return u * u + (v / 0.5) * (v / 0.5) <= 1.0;                    // wide ellipse
    case 12: return (u / 0.5) * (u / 0.5) + v * v <= 1.0;                    // tall ellipse
    case 13: return (u >= -0.8 && u <= -0.3 && av <= 0.8) || (v >= 0.3 && v <= 0.8 && au <= 0.8);  // L
    case 14: return (u - 0.5) * (u - 0.5) + v * v <= 0.16 || (u + 0.5) * (u + 0.5) + v * v <= 0.16;  // dots
    case 15: return (v >= -0.8 && v <= -0.4 && au <= 0.8) || (au <= 0.2 && v >= -0.8 && v <= 0.8);   // T
    default: return false;
  }
}

void render(std::size_t kind, std::size_t size, std::mt19937_64& rng, std::uint8_t* out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double bg[3], fg[3];
  // Light, slightly tinted background; the shape colour is redrawn until it
  // stands out from it.
  for (double& c : bg) c = 0.75 + 0.25 * unit(rng);
  do {
    for (double& c : fg) c = unit(rng);
  } while (std::abs(fg[0] - bg[0]) + std::abs(fg[1] - bg[1]) + std::abs(fg[2] - bg[2]) < 0.6);
  const double s = static_cast<double>(size);
  const double radius = s * (0.18 + 0.14 * unit(rng));
  const double lo = radius + 1.0, hi = s - radius - 1.0;
  const double cx = lo + (hi - lo) * unit(rng);
  const double cy = lo + (hi - lo) * unit(rng);
  const double angle = (unit(rng) - 0.5) * std::numbers::pi / 4;
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      // 2x2 supersampling for soft edges.
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const double px = static_cast<double>(x) + 0.25 + 0.5 * sx - cx;
          const double py = static_cast<double>(y) + 0.25 + 0.5 * sy - cy;
          const double u = (ca * px + sa * py) / radius;
          const double v = (-sa * px + ca * py) / radius;
          hits += inside(kind, u, v) ? 1 : 0;
        }
      const double cover = hits / 4.0;
      for (int c = 0; c < 3; ++c) {
        const double val = std::clamp(cover * fg[c] + (1.0 - cover) * bg[c] + noise(rng), 0.0, 1.0);
        out[(y * size + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(val * 255.0));
      }
    }
}

Dataset empty_like(std::size_t count, const ShapesConfig& cfg) {
  Dataset d;
  d.count = count;
  d.height = d.width = cfg.size;
  d.channels = 3;
  d.num_classes = cfg.classes;
  d.class_names.assign(shape_names().begin(), shape_names().begin() + static_cast<long>(cfg.classes));
  d.labels.reserve(count);
  d.pixels.reserve(count * d.image_bytes());
  return d;
}

}  // namespace

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names = {
      "circle", "square", "triangle", "cross", "ring", "diamond", "hbar", "vbar",
      "x", "frame", "inverted_triangle", "wide_ellipse", "tall_ellipse", "ell", "dots", "tee"};
  return names;
}

void Dataset::validate() const {
  if (labels.size() != count) throw ConfigError("dataset: label count does not match image count");
  if (pixels.size() != count * image_bytes()) throw ConfigError("dataset: pixel buffer has the wrong length");
  for (std::uint16_t l : labels) {
    if (num_classes != 0 && l >= num_classes) {
      throw ConfigError("dataset: label " + std::to_string(l) + " >= num_classes " + std::to_string(num_classes));
    }
  }
}

template <typename T>
Tensor<T> Dataset::batch(std::span<const std::size_t> indices) const {
  Tensor<T> out(Shape{indices.size(), channels, height, width});
  const std::size_t plane = height * width;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= count) throw ContractError("dataset: image index out of range");
    const std::uint8_t* src = pixels.data() + indices[b] * image_bytes();
    T* dst = out.data.data() + b * channels * plane;
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < channels; ++c) dst[c * plane + p] = static_cast<T>(src[p * channels + c]) / T{255};
  }
  return out;
}

template <typename T>
Tensor<T> Dataset::range(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return batch<T>(idx);
}

std::vector<std::size_t> Dataset::labels_of(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

std::vector<std::uint8_t> Dataset::to_bytes() const {
  validate();
  std::vector<std::uint8_t> out = {'I', 'M', 'G', 'D'};
  out.reserve(kHeaderBytes + 2 * count + pixels.size());
  put_u32(out, static_cast<std::uint32_t>(count));
  put_u32(out, static_cast<std::uint32_t>(height));
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(channels));
  for (std::uint16_t l : labels) {
    out.push_back(static_cast<std::uint8_t>(l & 0xFF));
    out.push_back(static_cast<std::uint8_t>(l >> 8));
  }
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

Dataset Dataset::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || !std::equal(bytes.begin(), bytes.begin() + 4, "IMGD")) {
    throw IoError("dataset: missing IMGD header");
  }
  Dataset d;
  d.count = get_u32(bytes, 4);
  d.height = get_u32(bytes, 8);
  d.width = get_u32(bytes, 12);
  d.channels = get_u32(bytes, 16);
  const std::size_t expected = kHeaderBytes + 2 * d.count + d.count * d.image_bytes();
  if (bytes.size() != expected) {
    throw IoError("dataset: file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                  std::to_string(expected));
  }
  d.labels.resize(d.count);
  for (std::size_t i = 0; i < d.count; ++i) {
    d.labels[i] = static_cast<std::uint16_t>(bytes[kHeaderBytes + 2 * i] | (bytes[kHeaderBytes + 2 * i + 1] << 8));
  }
  d.pixels.assign(bytes.begin() + static_cast<long>(kHeaderBytes + 2 * d.count), bytes.end());
  return d;
}

void Dataset::save(const std::filesystem::path& path) const {
  write_file(path, to_bytes());
  std::ostringstream meta;
  meta << "num_classes=" << num_classes << "\n";
  if (!class_names.empty()) {
    meta << "class_names=";
    for (std::size_t i = 0; i < class_names.size(); ++i) meta << (i ? "," : "") << class_names[i];
    meta << "\n";
  }
  const std::string text = meta.str();
  write_file(path.string() + ".meta", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset Dataset::load(const std::filesystem::path& path) {
  Dataset d = from_bytes(read_file(path));
  const std::filesystem::path meta = path.string() + ".meta";
  if (!std::filesystem::exists(meta)) throw IoError("dataset: missing sidecar '" + meta.string() + "'");
  const auto bytes = read_file(meta);
  for (const auto& [key, value] : parse_key_values(std::string(bytes.begin(), bytes.end()), meta.string())) {
    if (key == "num_classes") {
      d.num_classes = parse_size(value, key);
    } else if (key == "class_names") {
      d.class_names = split_list(value);
    } else {
      throw ConfigError(meta.string() + ": unknown key '" + key + "'");
    }
  }
  if (d.num_classes == 0) throw ConfigError(meta.string() + ": num_classes missing");
  d.validate();
  return d;
}

DatasetSplit generate_shapes(const ShapesConfig& cfg) {
  if (cfg.size < 16) throw ConfigError("shapes: image size must be >= 16, got " + std::to_string(cfg.size));
  if (cfg.classes < 2 || cfg.classes > 16) throw ConfigError("shapes: classes must be in 2..16");
  if (cfg.num_per_class < 4) throw ConfigError("shapes: need at least 4 images per class");
  const std::size_t test_per_class = cfg.num_per_class / 4;
  std::mt19937_64 rng(cfg.seed);

  auto make = [&](std::size_t per_class) {
    std::vector<std::uint16_t> order;
    for (std::size_t c = 0; c < cfg.classes; ++c) order.insert(order.end(), per_class, static_cast<std::uint16_t>(c));
    std::shuffle(order.begin(), order.end(), rng);
    Dataset d = empty_like(order.size(), cfg);
    std::vector<std::uint8_t> image(cfg.size * cfg.size * 3);
    for (std::uint16_t label : order) {
      render(label, cfg.size, rng, image.data());
      d.labels.push_back(label);
      d.pixels.insert(d.pixels.end(), image.begin(), image.end());
    }
    return d;
  };
  DatasetSplit split;
  split.train = make(cfg.num_per_class);
  split.test = make(test_per_class);
  return split;
}

template Tensor<float> Dataset::batch<float>(std::span<const std::size_t>) const;
template Tensor<double> Dataset::batch<double>(std::span<const std::size_t>) const;
template Tensor<float> Dataset::range<float>(std::size_t, std::size_t) const;
template Tensor<double> Dataset::range<double>(std::size_t, std::size_t) const;

}  // namespace sdjscc
