#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace radarfield::nets {

// Three conv/pool stages (channels 32, 64, 128) followed by a linear map to
// the latent measurement. Spatial size shrinks K x L -> K/8 x L/8, so K and L
// must be divisible by 8.
class ConvEncoderImpl : public torch::nn::Module {
 public:
  ConvEncoderImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L, std::int64_t M);
  torch::Tensor forward(const torch::Tensor& x);  // B x C x K x L -> B x M

  torch::nn::Conv2d c1{nullptr}, c2{nullptr}, c3{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(ConvEncoder);

// Mirror of the encoder: linear map to a K/8 x L/8 x 128 seed, then three
// (nearest upsample x2, conv) stages with channels 128 -> 64 -> 32 -> 3.
// The final conv is linear; outputs are (vx, vy, q) in normalized units.
class ConvDecoderImpl : public torch::nn::Module {
 public:
  ConvDecoderImpl(std::int64_t D, std::int64_t K, std::int64_t L);
  torch::Tensor forward(const torch::Tensor& z);  // B x D -> B x 3 x K x L

  torch::nn::Linear fc{nullptr};
  torch::nn::Conv2d c1{nullptr}, c2{nullptr}, c3{nullptr};

 private:
  std::int64_t seed_k_, seed_l_;
};
TORCH_MODULE(ConvDecoder);

}  // namespace radarfield::nets
