#include "sdjscc/codec.hpp"

#include "sdjscc/ops.hpp"

namespace sdjscc {

namespace {

template <typename T>
std::vector<ResidualBlock<T>> make_blocks(const std::string& prefix, std::size_t n, std::size_t channels,
                                          Rng& rng) {
  std::vector<ResidualBlock<T>> blocks;
  blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) blocks.emplace_back(prefix + std::to_string(i), channels, rng);
  return blocks;
}

const CodecArch& validated(const CodecArch& arch) {
  arch.validate();
  return arch;
}

}  // namespace

void CodecArch::validate() const {
  if (height % 4 != 0 || width % 4 != 0 || height == 0 || width == 0) {
    throw ConfigError("codec: image size " + std::to_string(height) + "x" + std::to_string(width) +
                      " must be a positive multiple of 4");
  }
  if (in_channels == 0 || base_channels == 0 || latent_channels == 0) {
    throw ConfigError("codec: channel counts must be positive");
  }
}

double CodecArch::bpp() const { return sdjscc::bpp(symbols(), height, width); }

template <typename T>
Codec<T>::Codec(const CodecArch& arch, std::uint64_t seed)
    : arch_(validated(arch)),
      rng_(seed),
      enc_in_("enc.in", arch.in_channels, arch.base_channels, 3, 2, 1, rng_),
      enc_blocks_(make_blocks<T>("enc.res", arch.num_residual_blocks, arch.base_channels, rng_)),
      enc_down_("enc.down", arch.base_channels, arch.base_channels, 3, 2, 1, rng_),
      enc_out_("enc.out", arch.base_channels, arch.latent_channels, 3, 1, 1, rng_),
      dec_in_("dec.in", arch.latent_channels, arch.base_channels, 3, 1, 1, rng_),
      dec_up_("dec.up", arch.base_channels, arch.base_channels, 3, 1, 1, rng_),
      dec_blocks_(make_blocks<T>("dec.res", arch.num_residual_blocks, arch.base_channels, rng_)),
      dec_out_("dec.out", arch.base_channels, arch.in_channels, 3, 1, 1, rng_) {}

template <typename T>
Var Codec<T>::encode(Tape<T>& tape, Var x) {
  const Shape& xs = tape.shape(x);
  if (xs.size() != 4 || xs[1] != arch_.in_channels || xs[2] != arch_.height || xs[3] != arch_.width) {
    throw ConfigError("codec: encoder configured for " + shape_string(arch_.image_shape(0)) +
                      " (batch first), got " + shape_string(xs));
  }
  for (T v : tape.value(x).data) {
    if (!(v >= T{0} && v <= T{1})) throw ContractError("codec: encoder input pixels must lie in [0,1]");
  }
  Var h = relu(tape, enc_in_.forward(tape, x));
  for (auto& block : enc_blocks_) h = block.forward(tape, h);
  h = relu(tape, enc_down_.forward(tape, h));
  return sigmoid(tape, enc_out_.forward(tape, h));
}

template <typename T>
Var Codec<T>::decode(Tape<T>& tape, Var received) {
  const Shape& rs = tape.shape(received);
  if (rs.size() != 4 || rs[1] != arch_.latent_channels || rs[2] != arch_.height / 4 || rs[3] != arch_.width / 4) {
    throw ConfigError("codec: decoder configured for latent " + shape_string(arch_.latent_shape(0)) +
                      " (batch first), got " + shape_string(rs));
  }
  Var h = relu(tape, dec_in_.forward(tape, received));
  h = relu(tape, dec_up_.forward(tape, nearest_upsample2x(tape, h)));
  for (auto& block : dec_blocks_) h = block.forward(tape, h);
  return sigmoid(tape, dec_out_.forward(tape, nearest_upsample2x(tape, h)));
}

template <typename T>
Var Codec<T>::transmit(Tape<T>& tape, Var x, AwgnChannel& channel, PipelineOptions options) {
  Var e = encode(tape, x);
  Var q = options.quantize ? quantize(tape, e) : e;
  return decode(tape, channel.transmit(tape, q));
}

template <typename T>
Tensor<T> Codec<T>::reconstruct(const Tensor<T>& x, AwgnChannel& channel, PipelineOptions options) {
  Tape<T> tape;
  tape.set_grad_enabled(false);
  return tape.value(transmit(tape, tape.constant(x), channel, options));
}

template <typename T>
Tensor<T> Codec<T>::encode_values(const Tensor<T>& x) {
  Tape<T> tape;
  tape.set_grad_enabled(false);
  return tape.value(encode(tape, tape.constant(x)));
}

template <typename T>
ParameterList<T> Codec<T>::parameters() {
  ParameterList<T> out;
  enc_in_.collect(out);
  for (auto& b : enc_blocks_) b.collect(out);
  enc_down_.collect(out);
  enc_out_.collect(out);
  dec_in_.collect(out);
  dec_up_.collect(out);
  for (auto& b : dec_blocks_) b.collect(out);
  dec_out_.collect(out);
  require_unique_names(out);
  return out;
}

template <typename T>
Checkpoint Codec<T>::checkpoint(CheckpointMeta meta) {
  return make_checkpoint(parameters(), meta);
}

template <typename T>
void Codec<T>::load(const Checkpoint& ckpt) {
  load_parameters(ckpt, parameters());
}

template class Codec<float>;
template class Codec<double>;

}  // namespace sdjscc
