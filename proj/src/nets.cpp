#include "radarfield/nets.hpp"

namespace radarfield::nets {

namespace {

torch::nn::Conv2d conv3x3(std::int64_t in, std::int64_t out) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(1).padding(1));
}

void check_divisible(std::int64_t K, std::int64_t L) {
  TORCH_CHECK(K % 8 == 0 && L % 8 == 0 && K >= 8 && L >= 8,
              "grid sides must be divisible by 8 for the three pooling stages");
}

}  // namespace

ConvEncoderImpl::ConvEncoderImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L,
                                 std::int64_t M) {
  check_divisible(K, L);
  c1 = register_module("c1", conv3x3(in_channels, 32));
  c2 = register_module("c2", conv3x3(32, 64));
  c3 = register_module("c3", conv3x3(64, 128));
  fc = register_module("fc", torch::nn::Linear(128 * (K / 8) * (L / 8), M));
}

torch::Tensor ConvEncoderImpl::forward(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() == 4, "encoder input must be B x C x K x L");
  torch::Tensor h = torch::max_pool2d(torch::relu(c1(x)), 2);
  h = torch::max_pool2d(torch::relu(c2(h)), 2);
  h = torch::max_pool2d(torch::relu(c3(h)), 2);
  return fc(h.flatten(1));
}

ConvDecoderImpl::ConvDecoderImpl(std::int64_t D, std::int64_t K, std::int64_t L)
    : seed_k_(K / 8), seed_l_(L / 8) {
  check_divisible(K, L);
  fc = register_module("fc", torch::nn::Linear(D, 128 * seed_k_ * seed_l_));
  c1 = register_module("c1", conv3x3(128, 64));
  c2 = register_module("c2", conv3x3(64, 32));
  c3 = register_module("c3", conv3x3(32, 3));
}

torch::Tensor ConvDecoderImpl::forward(const torch::Tensor& z) {
  TORCH_CHECK(z.dim() == 2, "decoder input must be B x D");
  torch::Tensor h = fc(z).view({z.size(0), 128, seed_k_, seed_l_});
  h = torch::relu(c1(torch::upsample_nearest2d(h, {seed_k_ * 2, seed_l_ * 2})));
  h = torch::relu(c2(torch::upsample_nearest2d(h, {seed_k_ * 4, seed_l_ * 4})));
  return c3(torch::upsample_nearest2d(h, {seed_k_ * 8, seed_l_ * 8}));
}

}  // namespace radarfield::nets
