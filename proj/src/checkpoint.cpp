#include "sdjscc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sdjscc {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'J', 'C'};

class Writer {
 public:
  template <typename U>
  void put(U value) {
    using Bits = std::conditional_t<sizeof(U) == 1, std::uint8_t,
                 std::conditional_t<sizeof(U) == 2, std::uint16_t,
                 std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>>>;
    const auto bits = std::bit_cast<Bits>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename U>
  U get() {
    using Bits = std::conditional_t<sizeof(U) == 1, std::uint8_t,
                 std::conditional_t<sizeof(U) == 2, std::uint16_t,
                 std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>>>;
    need(sizeof(U));
    Bits bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<Bits>(static_cast<Bits>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return std::bit_cast<U>(bits);
  }
  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw IoError("checkpoint: truncated data");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

NamedTensor meta_tensor(std::string name, double value) {
  return NamedTensor{std::move(name), Shape{1}, std::vector<double>{value}};
}

void write_tensor(Writer& w, const NamedTensor& t) {
  if (t.name.size() > 0xFFFF) throw IoError("checkpoint: tensor name too long");
  if (t.shape.size() > 0xFF) throw IoError("checkpoint: too many dimensions");
  w.put(static_cast<std::uint16_t>(t.name.size()));
  w.bytes(t.name.data(), t.name.size());
  w.put(static_cast<std::uint8_t>(t.dtype()));
  w.put(static_cast<std::uint8_t>(t.shape.size()));
  for (std::size_t d : t.shape) w.put(static_cast<std::uint32_t>(d));
  std::visit([&](const auto& vals) { for (auto v : vals) w.put(v); }, t.values);
}

}  // namespace

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
  Writer w;
  w.bytes(kMagic, 4);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(tensors.size() + 3));
  for (const NamedTensor& t : tensors) {
    if (numel(t.shape) != std::visit([](const auto& v) { return v.size(); }, t.values)) {
      throw IoError("checkpoint: tensor '" + t.name + "' has inconsistent shape");
    }
    write_tensor(w, t);
  }
  write_tensor(w, meta_tensor("meta.stage", static_cast<double>(meta.stage)));
  write_tensor(w, meta_tensor("meta.step", static_cast<double>(meta.step)));
  write_tensor(w, meta_tensor("meta.loss", meta.loss));
  return std::move(w.out);
}

Checkpoint Checkpoint::from_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.string(4) != std::string(kMagic, 4)) throw IoError("checkpoint: bad magic (expected SDJC)");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.string(r.get<std::uint16_t>());
    const auto dtype = r.get<std::uint8_t>();
    const auto ndim = r.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < ndim; ++d) t.shape.push_back(r.get<std::uint32_t>());
    const std::size_t n = numel(t.shape);
    if (dtype == static_cast<std::uint8_t>(DType::f32)) {
      std::vector<float> v(n);
      for (float& x : v) x = r.get<float>();
      t.values = std::move(v);
    } else if (dtype == static_cast<std::uint8_t>(DType::f64)) {
      std::vector<double> v(n);
      for (double& x : v) x = r.get<double>();
      t.values = std::move(v);
    } else {
      throw IoError("checkpoint: tensor '" + t.name + "' has unknown dtype " + std::to_string(dtype));
    }
    auto scalar = [&]() {
      if (t.dtype() != DType::f64 || n != 1) throw IoError("checkpoint: malformed " + t.name);
      return std::get<std::vector<double>>(t.values)[0];
    };
    if (t.name == "meta.stage") {
      ckpt.meta.stage = static_cast<std::int64_t>(scalar());
    } else if (t.name == "meta.step") {
      ckpt.meta.step = static_cast<std::int64_t>(scalar());
    } else if (t.name == "meta.loss") {
      ckpt.meta.loss = scalar();
    } else {
      ckpt.tensors.push_back(std::move(t));
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes after last tensor");
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file(path, to_bytes()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return from_bytes(read_file(path)); }

template <typename T>
Checkpoint make_checkpoint(const ParameterList<T>& params, CheckpointMeta meta) {
  Checkpoint ckpt;
  ckpt.meta = meta;
  for (const Parameter<T>* p : params) {
    ckpt.tensors.push_back(NamedTensor{p->name, p->tensor.shape, p->tensor.data});
  }
  return ckpt;
}

template <typename T>
void load_parameters(const Checkpoint& ckpt, const ParameterList<T>& params) {
  for (Parameter<T>* p : params) {
    const NamedTensor* t = ckpt.find(p->name);
    if (t == nullptr) throw ConfigError("checkpoint has no tensor named '" + p->name + "'");
    if (t->shape != p->tensor.shape) {
      throw ConfigError("checkpoint tensor '" + p->name + "' has shape " + shape_string(t->shape) +
                        ", network expects " + shape_string(p->tensor.shape));
    }
    std::visit([&](const auto& vals) { p->tensor.data.assign(vals.begin(), vals.end()); }, t->values);
  }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t parameter_hash(const ParameterList<T>& params) {
  return fnv1a64(make_checkpoint(params, {}).to_bytes());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

template Checkpoint make_checkpoint<float>(const ParameterList<float>&, CheckpointMeta);
template Checkpoint make_checkpoint<double>(const ParameterList<double>&, CheckpointMeta);
template void load_parameters<float>(const Checkpoint&, const ParameterList<float>&);
template void load_parameters<double>(const Checkpoint&, const ParameterList<double>&);
template std::uint64_t parameter_hash<float>(const ParameterList<float>&);
template std::uint64_t parameter_hash<double>(const ParameterList<double>&);

}  // namespace sdjscc
