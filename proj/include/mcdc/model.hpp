#pragma once

#include <cstdint>
#include <vector>

#include "mcdc/nn.hpp"
#include "mcdc/rng.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

enum class Family { conv_paper, mlp_toy };

// conv_paper: blocks of two 3x3 convolutions (channels doubled inside each
// block), 2x2 average pooling after every block but the last, leaky ReLU
// everywhere, then a dense head to latent_dim with no activation. The decoder
// mirrors the encoder with nearest-neighbour upsampling in place of pooling.
//
// mlp_toy: `num_blocks` hidden dense layers of width `base_channels` (the
// field does double duty as the hidden width for this family), then a dense
// layer to latent_dim with no activation.
struct ArchitectureSpec {
    Family family = Family::conv_paper;
    std::vector<size_t> input_shape; // {C,H,W} for conv_paper, {D} for mlp_toy
    size_t base_channels = 16;
    size_t num_blocks = 3;
    size_t latent_dim = 256;
    float negative_slope = 0.2f;
};

// phi (encoder), theta (decoder), omega (discriminator). The discriminator
// stack has the encoder's exact layer shapes with independent parameters.
struct ModelParams {
    ArchitectureSpec spec;
    std::vector<LayerParams> encoder_layers;
    std::vector<LayerParams> decoder_layers;
    std::vector<LayerParams> discriminator_layers;
};

ModelParams build_model(const ArchitectureSpec& spec, RngStream& rng);

// z for a batch; x is [N,C,H,W] (conv_paper) or [N,D] / [N,...] flattening
// to D (mlp_toy).
Tensor encode(const ModelParams& m, const Tensor& x, ForwardCache* cache = nullptr);

// x_hat shaped like the spec input (batched).
Tensor decode(const ModelParams& m, const Tensor& z, ForwardCache* cache = nullptr);

// alpha_hat per batch item: the mean of the flattened final discriminator
// feature map. Not clamped; the losses regress it.
std::vector<float> discriminate(const ModelParams& m, const Tensor& xhat, ForwardCache* cache = nullptr);

// Final discriminator feature map before the mean head (needed to backprop
// through the mean).
Tensor discriminator_features(const ModelParams& m, const Tensor& xhat, ForwardCache* cache = nullptr);

size_t parameter_count(const std::vector<LayerParams>& layers);

} // namespace mcdc
