#include "mcdc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcdc/errors.hpp"

namespace mcdc {

TermMask mask_for(Variant v) {
    switch (v) {
        case Variant::baseline: return {false, false};
        case Variant::acai: return {true, false};
        case Variant::mcdc: return {true, true};
    }
    return {};
}

std::vector<std::pair<size_t, size_t>> pair_by_reversal(size_t m) {
    std::vector<std::pair<size_t, size_t>> pairs;
    pairs.reserve(m);
    for (size_t i = 0; i < m; ++i) pairs.emplace_back(i, m - 1 - i);
    return pairs;
}

Tensor mix_latents(const Tensor& z_i, const Tensor& z_j, float alpha) {
    if (!(alpha >= 0.0f && alpha <= 1.0f))
        throw std::invalid_argument("mix_latents: alpha must be in [0,1], got " + std::to_string(alpha));
    require_same_shape(z_i, z_j, "mix_latents");
    if (alpha == 0.0f) return z_i; // exact convex endpoints
    if (alpha == 1.0f) return z_j;
    Tensor out(z_i.shape);
    const float one_minus = 1.0f - alpha;
    for (size_t k = 0; k < out.numel(); ++k)
        out.data[k] = one_minus * z_i.data[k] + alpha * z_j.data[k];
    return out;
}

size_t mixing_target(size_t i, size_t j, float alpha) {
    if (!(alpha >= 0.0f && alpha <= 1.0f))
        throw std::invalid_argument("mixing_target: alpha must be in [0,1]");
    return alpha <= 0.5f ? i : j; // 0.5 belongs to both intervals in the rule; i wins
}

std::pair<double, Tensor> mixing_consistency_loss(const Tensor& x_target, const Tensor& xhat_alpha) {
    return mse_loss(xhat_alpha, x_target);
}

double discriminator_loss(const std::vector<float>& alpha_hat_mixed, const std::vector<float>& alpha,
                          const std::vector<float>& alpha_hat_blend) {
    return discriminator_loss_core<float>(alpha_hat_mixed, alpha, alpha_hat_blend);
}

namespace {

double mean_square(const std::vector<float>& v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

std::vector<float> row_means(const Tensor& feat_in) {
    const Tensor feat = detail::flatten_rows(feat_in);
    const size_t n = feat.dim(0), d = feat.dim(1);
    std::vector<float> out(n);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < d; ++j) acc += feat.at2(i, j);
        out[i] = static_cast<float>(acc / static_cast<double>(d));
    }
    return out;
}

Tensor normalize_batch(const ModelParams& m, const Tensor& batch) {
    if (m.spec.family == Family::mlp_toy && batch.rank() > 2)
        return detail::flatten_rows(batch);
    return batch;
}

} // namespace

LossBreakdown autoencoder_loss(const Tensor& x_i, const Tensor& xhat_i, const Tensor& xhat_alpha,
                               const std::vector<float>& alpha_hat_mixed, const Tensor& target_x,
                               const TrainConfig& cfg) {
    const TermMask mask = mask_for(cfg.variant);
    LossBreakdown out;
    out.recon = mse_loss(xhat_i, x_i).first;
    if (mask.adversarial) {
        if (alpha_hat_mixed.empty())
            throw std::invalid_argument("autoencoder_loss: variant needs alpha_hat_mixed");
        out.adversarial = mean_square(alpha_hat_mixed);
    }
    if (mask.mix_consistency) {
        if (xhat_alpha.numel() == 0 || target_x.numel() == 0)
            throw std::invalid_argument("autoencoder_loss: variant needs the decoded mix and its target");
        out.mix_consistency = mixing_consistency_loss(target_x, xhat_alpha).first;
    }
    out.total_autoencoder =
        out.recon + static_cast<double>(cfg.lambda) * out.adversarial + out.mix_consistency;
    return out;
}

Trainer::Trainer(ModelParams m, float lr) : model(std::move(m)) {
    auto init_states = [lr](const std::vector<LayerParams>& layers, std::vector<AdamState>& ws,
                            std::vector<AdamState>& bs) {
        for (const auto& l : layers) {
            ws.push_back(AdamState::for_param(l.weights, lr));
            bs.push_back(AdamState::for_param(l.bias, lr));
        }
    };
    init_states(model.encoder_layers, encoder_w, encoder_b);
    init_states(model.decoder_layers, decoder_w, decoder_b);
    init_states(model.discriminator_layers, disc_w, disc_b);
}

namespace {

void apply_adam(std::vector<LayerParams>& layers, const StackGrads& grads,
                std::vector<AdamState>& ws, std::vector<AdamState>& bs) {
    for (size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        adam_step(layers[i].weights, grads.weights[i], ws[i]);
        adam_step(layers[i].bias, grads.bias[i], bs[i]);
    }
}

// dL/dfeature for a mean-head scalar: every feature element of row s gets
// d(alpha_hat_s) / feature_width.
Tensor spread_mean_grad(const std::vector<size_t>& feat_shape, const std::vector<float>& dalpha) {
    Tensor g(feat_shape);
    const size_t n = g.dim(0);
    const size_t width = g.numel() / n;
    for (size_t s = 0; s < n; ++s) {
        const float v = dalpha[s] / static_cast<float>(width);
        for (size_t j = 0; j < width; ++j) g.data[s * width + j] = v;
    }
    return g;
}

} // namespace

LossBreakdown train_step_masked(Trainer& t, const Tensor& batch_in, const TrainConfig& cfg,
                                RngStream& rng, TermMask mask, bool update_discriminator) {
    ModelParams& m = t.model;
    const Tensor batch = normalize_batch(m, batch_in);
    if (batch.rank() < 2 || batch.dim(0) == 0)
        throw std::invalid_argument("train_step: empty batch");
    const size_t mb = batch.dim(0);

    ForwardCache enc_cache, dec_cache;
    const Tensor z = stack_forward(m.encoder_layers, batch, &enc_cache);
    const Tensor xhat = stack_forward(m.decoder_layers, z, &dec_cache);
    auto [recon_loss, dxhat] = mse_loss(xhat, batch);

    LossBreakdown out;
    out.recon = recon_loss;

    const bool mix_path = mask.adversarial || mask.mix_consistency || update_discriminator;

    std::vector<float> alphas;
    Tensor z_mix, xhat_mix, dxhat_mix_term;
    ForwardCache dec_cache_mix, disc_cache_mix, disc_cache_blend;
    std::vector<float> ahat_mix, ahat_blend;
    double mix_loss_value = 0.0;

    if (mix_path) {
        alphas.resize(mb);
        for (auto& a : alphas) a = rng.next_float() * 0.5f; // per-sample alpha ~ U[0, 0.5]

        // Reversed-copy pairing: row s mixes with row mb-1-s. The target for
        // every mix is the row's own input (alpha <= 0.5 side of the rule).
        z_mix = Tensor(z.shape);
        const size_t width = z.dim(1);
        for (size_t s = 0; s < mb; ++s) {
            const float a = alphas[s];
            const float* zi = &z.data[s * width];
            const float* zj = &z.data[(mb - 1 - s) * width];
            float* zm = &z_mix.data[s * width];
            for (size_t j = 0; j < width; ++j) zm[j] = (1.0f - a) * zi[j] + a * zj[j];
        }
        xhat_mix = stack_forward(m.decoder_layers, z_mix, &dec_cache_mix);
        std::tie(mix_loss_value, dxhat_mix_term) = mixing_consistency_loss(batch, xhat_mix);

        const Tensor feat_mix = stack_forward(m.discriminator_layers, xhat_mix, &disc_cache_mix);
        ahat_mix = row_means(feat_mix);

        Tensor blend(batch.shape);
        const float g = cfg.gamma;
        for (size_t k = 0; k < blend.numel(); ++k)
            blend.data[k] = g * batch.data[k] + (1.0f - g) * xhat.data[k];
        const Tensor feat_blend = stack_forward(m.discriminator_layers, blend, &disc_cache_blend);
        ahat_blend = row_means(feat_blend);

        if (mask.adversarial) out.adversarial = mean_square(ahat_mix);
        if (mask.mix_consistency) out.mix_consistency = mix_loss_value;
        out.discriminator = discriminator_loss(ahat_mix, alphas, ahat_blend);
    }
    out.total_autoencoder =
        out.recon + static_cast<double>(cfg.lambda) * out.adversarial + out.mix_consistency;

    // --- discriminator update (omega only; phi/theta see frozen inputs) ---
    if (update_discriminator) {
        StackGrads disc_grads = zero_grads(m.discriminator_layers);
        std::vector<float> d_mix(mb), d_blend(mb);
        for (size_t s = 0; s < mb; ++s) {
            d_mix[s] = 2.0f * (ahat_mix[s] - alphas[s]) / static_cast<float>(mb);
            d_blend[s] = 2.0f * ahat_blend[s] / static_cast<float>(mb);
        }
        const std::vector<size_t> feat_shape = {mb, m.spec.latent_dim};
        stack_backward(m.discriminator_layers, disc_cache_mix, spread_mean_grad(feat_shape, d_mix),
                       &disc_grads);
        stack_backward(m.discriminator_layers, disc_cache_blend, spread_mean_grad(feat_shape, d_blend),
                       &disc_grads);
        apply_adam(m.discriminator_layers, disc_grads, t.disc_w, t.disc_b);
    }

    // --- autoencoder update (phi, theta; omega frozen) ---
    StackGrads dec_grads = zero_grads(m.decoder_layers);
    Tensor dz = stack_backward(m.decoder_layers, dec_cache, dxhat, &dec_grads);

    const bool adversarial_grad = mask.adversarial && cfg.lambda != 0.0f;
    if (mask.mix_consistency || adversarial_grad) {
        Tensor dxmix = mask.mix_consistency ? dxhat_mix_term : Tensor(xhat_mix.shape);
        if (adversarial_grad) {
            std::vector<float> d_adv(mb);
            for (size_t s = 0; s < mb; ++s)
                d_adv[s] = 2.0f * cfg.lambda * ahat_mix[s] / static_cast<float>(mb);
            const std::vector<size_t> feat_shape = {mb, m.spec.latent_dim};
            const Tensor dxmix_adv =
                stack_backward(m.discriminator_layers, disc_cache_mix,
                               spread_mean_grad(feat_shape, d_adv), static_cast<StackGrads*>(nullptr));
            for (size_t k = 0; k < dxmix.numel(); ++k) dxmix.data[k] += dxmix_adv.data[k];
        }
        const Tensor dz_mix = stack_backward(m.decoder_layers, dec_cache_mix, dxmix, &dec_grads);
        const size_t width = z.dim(1);
        for (size_t s = 0; s < mb; ++s) {
            const float a = alphas[s];
            const float* gm = &dz_mix.data[s * width];
            float* gi = &dz.data[s * width];
            float* gj = &dz.data[(mb - 1 - s) * width];
            for (size_t j = 0; j < width; ++j) {
                gi[j] += (1.0f - a) * gm[j];
                gj[j] += a * gm[j];
            }
        }
    }

    StackGrads enc_grads = zero_grads(m.encoder_layers);
    stack_backward(m.encoder_layers, enc_cache, dz, &enc_grads);

    apply_adam(m.decoder_layers, dec_grads, t.decoder_w, t.decoder_b);
    apply_adam(m.encoder_layers, enc_grads, t.encoder_w, t.encoder_b);
    return out;
}

LossBreakdown train_step(Trainer& t, const Tensor& batch, const TrainConfig& cfg, RngStream& rng) {
    const TermMask mask = mask_for(cfg.variant);
    const bool update_disc = cfg.variant != Variant::baseline;
    return train_step_masked(t, batch, cfg, rng, mask, update_disc);
}

namespace {

Tensor gather_rows(const Tensor& images, const std::vector<size_t>& order, size_t start, size_t count) {
    std::vector<size_t> shape = images.shape;
    shape[0] = count;
    Tensor out(shape);
    const size_t stride = images.numel() / images.dim(0);
    for (size_t i = 0; i < count; ++i) {
        const size_t src = order[start + i];
        std::copy_n(&images.data[src * stride], stride, &out.data[i * stride]);
    }
    return out;
}

} // namespace

std::vector<LossBreakdown> train(Trainer& t, const Tensor& images, const TrainConfig& cfg,
                                 const EpochCallback& on_epoch) {
    if (images.rank() < 2 || images.dim(0) == 0)
        throw std::invalid_argument("train: empty dataset");
    const size_t n = images.dim(0);
    const size_t m = std::min(cfg.batch_size, n);
    if (m == 0) throw std::invalid_argument("train: batch_size must be >= 1");

    RngStream run_rng(cfg.seed);
    RngStream step_rng = run_rng.split("alpha");
    std::vector<LossBreakdown> history;
    history.reserve(cfg.epochs);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream shuffle_rng = run_rng.split("shuffle", epoch);
        for (size_t i = n; i > 1; --i) {
            const size_t j = shuffle_rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        LossBreakdown mean;
        size_t steps = 0;
        // Inner k-step grouping from the training algorithm; each step
        // consumes one batch, the final short batch included.
        for (size_t start = 0; start < n;) {
            for (size_t kk = 0; kk < cfg.inner_steps && start < n; ++kk) {
                const size_t count = std::min(m, n - start);
                const Tensor batch = gather_rows(images, order, start, count);
                const LossBreakdown lb = train_step(t, batch, cfg, step_rng);
                mean.recon += lb.recon;
                mean.adversarial += lb.adversarial;
                mean.mix_consistency += lb.mix_consistency;
                mean.total_autoencoder += lb.total_autoencoder;
                mean.discriminator += lb.discriminator;
                start += count;
                ++steps;
            }
        }
        const double inv = 1.0 / static_cast<double>(steps);
        mean.recon *= inv;
        mean.adversarial *= inv;
        mean.mix_consistency *= inv;
        mean.total_autoencoder *= inv;
        mean.discriminator *= inv;
        history.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return history;
}

} // namespace mcdc
