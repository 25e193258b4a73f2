#include "mcdc/model.hpp"

#include <string>

#include "mcdc/errors.hpp"

namespace mcdc {

namespace {

LayerParams make_dense(size_t din, size_t dout, float negative_slope, RngStream& rng) {
    LayerParams l;
    l.kind = LayerKind::dense;
    l.fan_in = din;
    l.weights = Tensor({din, dout});
    l.bias = Tensor({dout}); // zero-initialized
    const double std = he_init_std(negative_slope, din);
    for (auto& w : l.weights.data) w = static_cast<float>(rng.normal() * std);
    return l;
}

LayerParams make_conv(size_t cin, size_t cout, float negative_slope, RngStream& rng) {
    LayerParams l;
    l.kind = LayerKind::conv3x3;
    l.fan_in = cin * 9;
    l.weights = Tensor({cout, cin, 3, 3});
    l.bias = Tensor({cout});
    const double std = he_init_std(negative_slope, l.fan_in);
    for (auto& w : l.weights.data) w = static_cast<float>(rng.normal() * std);
    return l;
}

LayerParams make_plain(LayerKind kind, float negative_slope = 0.0f) {
    LayerParams l;
    l.kind = kind;
    l.negative_slope = negative_slope;
    return l;
}

void validate(const ArchitectureSpec& spec) {
    if (spec.latent_dim < 1) throw SpecError("latent_dim must be >= 1");
    if (spec.num_blocks < 1) throw SpecError("num_blocks must be >= 1");
    if (spec.base_channels < 1) throw SpecError("base_channels must be >= 1");
    if (spec.family == Family::conv_paper) {
        if (spec.input_shape.size() != 3)
            throw SpecError("conv_paper input_shape must be {C,H,W}");
        const size_t pools = spec.num_blocks - 1;
        const size_t div = size_t(1) << pools;
        if (spec.input_shape[1] % div != 0 || spec.input_shape[2] % div != 0)
            throw SpecError("conv_paper: H and W must be divisible by 2^(num_blocks-1) = " +
                            std::to_string(div));
    } else {
        if (spec.input_shape.size() != 1 || spec.input_shape[0] < 1)
            throw SpecError("mlp_toy input_shape must be {D}");
    }
}

std::vector<LayerParams> build_encoder(const ArchitectureSpec& spec, RngStream& rng) {
    std::vector<LayerParams> layers;
    const float a = spec.negative_slope;
    if (spec.family == Family::mlp_toy) {
        const size_t d = spec.input_shape[0];
        const size_t hidden = spec.base_channels;
        size_t prev = d;
        for (size_t i = 0; i < spec.num_blocks; ++i) {
            layers.push_back(make_dense(prev, hidden, a, rng));
            layers.push_back(make_plain(LayerKind::leaky_relu, a));
            prev = hidden;
        }
        layers.push_back(make_dense(prev, spec.latent_dim, a, rng)); // latent head, no activation
        return layers;
    }
    size_t ch = spec.input_shape[0];
    for (size_t b = 0; b < spec.num_blocks; ++b) {
        const size_t c1 = spec.base_channels << b;
        const size_t c2 = c1 * 2; // channels doubled inside the block
        layers.push_back(make_conv(ch, c1, a, rng));
        layers.push_back(make_plain(LayerKind::leaky_relu, a));
        layers.push_back(make_conv(c1, c2, a, rng));
        layers.push_back(make_plain(LayerKind::leaky_relu, a));
        if (b + 1 < spec.num_blocks) layers.push_back(make_plain(LayerKind::avgpool2x2));
        ch = c2;
    }
    const size_t pools = spec.num_blocks - 1;
    const size_t h = spec.input_shape[1] >> pools;
    const size_t w = spec.input_shape[2] >> pools;
    layers.push_back(make_dense(ch * h * w, spec.latent_dim, a, rng)); // latent head, no activation
    return layers;
}

std::vector<LayerParams> build_decoder(const ArchitectureSpec& spec, RngStream& rng) {
    std::vector<LayerParams> layers;
    const float a = spec.negative_slope;
    if (spec.family == Family::mlp_toy) {
        const size_t d = spec.input_shape[0];
        const size_t hidden = spec.base_channels;
        size_t prev = spec.latent_dim;
        for (size_t i = 0; i < spec.num_blocks; ++i) {
            layers.push_back(make_dense(prev, hidden, a, rng));
            layers.push_back(make_plain(LayerKind::leaky_relu, a));
            prev = hidden;
        }
        layers.push_back(make_dense(prev, d, a, rng)); // output layer, no activation
        return layers;
    }
    const size_t pools = spec.num_blocks - 1;
    const size_t h = spec.input_shape[1] >> pools;
    const size_t w = spec.input_shape[2] >> pools;
    const size_t ch_top = spec.base_channels << spec.num_blocks;
    LayerParams head = make_dense(spec.latent_dim, ch_top * h * w, a, rng);
    head.reshape_to = {ch_top, h, w};
    layers.push_back(std::move(head));
    layers.push_back(make_plain(LayerKind::leaky_relu, a));
    for (size_t b = spec.num_blocks; b-- > 0;) {
        const size_t c2 = spec.base_channels << (b + 1);
        const size_t c1 = spec.base_channels << b;
        const size_t out = b == 0 ? spec.input_shape[0] : c1;
        layers.push_back(make_conv(c2, c1, a, rng));
        layers.push_back(make_plain(LayerKind::leaky_relu, a));
        layers.push_back(make_conv(c1, out, a, rng));
        if (b > 0) {
            layers.push_back(make_plain(LayerKind::leaky_relu, a));
            layers.push_back(make_plain(LayerKind::upsample_nn2x));
        }
        // b == 0: final conv is the reconstruction, no activation
    }
    return layers;
}

} // namespace

ModelParams build_model(const ArchitectureSpec& spec, RngStream& rng) {
    validate(spec);
    ModelParams m;
    m.spec = spec;
    m.encoder_layers = build_encoder(spec, rng);
    m.decoder_layers = build_decoder(spec, rng);
    m.discriminator_layers = build_encoder(spec, rng); // same stack, independent parameters
    return m;
}

namespace {

void check_input_shape(const ModelParams& m, const Tensor& x, const char* where) {
    if (x.rank() < 2) throw ShapeError(std::string(where) + ": expected batched input");
    size_t per_item = 1;
    for (size_t i = 1; i < x.rank(); ++i) per_item *= x.dim(i);
    size_t expected = 1;
    for (size_t e : m.spec.input_shape) expected *= e;
    if (m.spec.family == Family::conv_paper) {
        if (x.rank() != 4 || x.dim(1) != m.spec.input_shape[0] ||
            x.dim(2) != m.spec.input_shape[1] || x.dim(3) != m.spec.input_shape[2])
            throw ShapeError(std::string(where) + ": input " + x.shape_string() +
                             " does not match spec input shape");
    } else if (per_item != expected) {
        throw ShapeError(std::string(where) + ": input " + x.shape_string() + " flattens to " +
                         std::to_string(per_item) + ", spec wants " + std::to_string(expected));
    }
}

} // namespace

Tensor encode(const ModelParams& m, const Tensor& x, ForwardCache* cache) {
    check_input_shape(m, x, "encode");
    return stack_forward(m.encoder_layers, x, cache);
}

Tensor decode(const ModelParams& m, const Tensor& z, ForwardCache* cache) {
    const Tensor z2 = detail::flatten_rows(z);
    if (z2.dim(1) != m.spec.latent_dim)
        throw ShapeError("decode: latent width " + std::to_string(z2.dim(1)) + " != latent_dim " +
                         std::to_string(m.spec.latent_dim));
    return stack_forward(m.decoder_layers, z2, cache);
}

Tensor discriminator_features(const ModelParams& m, const Tensor& xhat, ForwardCache* cache) {
    check_input_shape(m, xhat, "discriminate");
    return stack_forward(m.discriminator_layers, xhat, cache);
}

std::vector<float> discriminate(const ModelParams& m, const Tensor& xhat, ForwardCache* cache) {
    const Tensor feat = detail::flatten_rows(discriminator_features(m, xhat, cache));
    const size_t n = feat.dim(0), d = feat.dim(1);
    std::vector<float> alpha_hat(n);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < d; ++j) acc += feat.at2(i, j);
        alpha_hat[i] = static_cast<float>(acc / static_cast<double>(d));
    }
    return alpha_hat;
}

size_t parameter_count(const std::vector<LayerParams>& layers) {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.numel() + l.bias.numel();
    return n;
}

} // namespace mcdc
