#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdjscc/channel.hpp"
#include "sdjscc/checkpoint.hpp"
#include "sdjscc/layers.hpp"

namespace sdjscc {

// Encoder: conv3x3/2 -> relu -> residual blocks -> conv3x3/2 -> relu
//          -> conv3x3 (latent_channels) -> sigmoid
// Decoder: conv3x3 -> relu -> up2x -> conv3x3 -> relu -> residual blocks
//          -> up2x -> conv3x3 (image channels) -> sigmoid
// The latent is [B, latent_channels, H/4, W/4], so bpp = latent_channels/16.
struct CodecArch {
  std::size_t in_channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t base_channels = 32;
  std::size_t latent_channels = 4;
  std::size_t num_residual_blocks = 2;

  void validate() const;
  Shape image_shape(std::size_t batch) const { return {batch, in_channels, height, width}; }
  Shape latent_shape(std::size_t batch) const { return {batch, latent_channels, height / 4, width / 4}; }
  std::size_t symbols() const { return latent_channels * (height / 4) * (width / 4); }
  double bpp() const;
};

struct PipelineOptions {
  // false skips the threshold quantizer (the encoder output goes straight to
  // the channel).
  bool quantize = true;
};

template <typename T>
class Codec {
 public:
  Codec(const CodecArch& arch, std::uint64_t seed);

  Codec(const Codec&) = delete;
  Codec& operator=(const Codec&) = delete;

  // x [B,C,H,W] in [0,1] -> e [B,latent,H/4,W/4] in [0,1].
  Var encode(Tape<T>& tape, Var x);
  // e' [B,latent,H/4,W/4] -> x' [B,C,H,W] in [0,1].
  Var decode(Tape<T>& tape, Var received);
  // x' = decode(quantize(encode(x)) + noise).
  Var transmit(Tape<T>& tape, Var x, AwgnChannel& channel, PipelineOptions options = {});

  // Gradient-free reconstruction.
  Tensor<T> reconstruct(const Tensor<T>& x, AwgnChannel& channel, PipelineOptions options = {});
  // Gradient-free encoder output (before quantization).
  Tensor<T> encode_values(const Tensor<T>& x);

  ParameterList<T> parameters();
  const CodecArch& arch() const { return arch_; }

  Checkpoint checkpoint(CheckpointMeta meta);
  void load(const Checkpoint& ckpt);

 private:
  CodecArch arch_;
  Rng rng_;
  Conv2d<T> enc_in_;
  std::vector<ResidualBlock<T>> enc_blocks_;
  Conv2d<T> enc_down_;
  Conv2d<T> enc_out_;
  Conv2d<T> dec_in_;
  Conv2d<T> dec_up_;
  std::vector<ResidualBlock<T>> dec_blocks_;
  Conv2d<T> dec_out_;
};

extern template class Codec<float>;
extern template class Codec<double>;

}  // namespace sdjscc
