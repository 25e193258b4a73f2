#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mcdc/adam.hpp"
#include "mcdc/model.hpp"
#include "mcdc/rng.hpp"

namespace mcdc {

enum class Variant { baseline, acai, mcdc };

// alpha is drawn per sample from U[0, 0.5]; with the reversed-pair batch
// construction every unordered pair is mixed from both sides, so the
// half-interval loses no direction.
enum class AlphaRule { uniform_half };

struct TrainConfig {
    Variant variant = Variant::mcdc;
    float lambda = 0.5f; // adversarial weight
    float gamma = 0.2f;  // stability blend for the second discriminator term
    AlphaRule alpha_rule = AlphaRule::uniform_half;
    size_t batch_size = 64;
    size_t epochs = 1;
    size_t inner_steps = 1;
    float lr = 1e-4f;
    uint64_t seed = 0;
};

struct LossBreakdown {
    double recon = 0.0;
    double adversarial = 0.0;
    double mix_consistency = 0.0;
    double total_autoencoder = 0.0;
    double discriminator = 0.0;
};

// Which autoencoder loss terms a variant contributes gradients for.
// Reconstruction is always on; baseline adds nothing, acai adds the
// adversarial term, mcdc adds both.
struct TermMask {
    bool adversarial = false;
    bool mix_consistency = false;
};
TermMask mask_for(Variant v);

// Item i pairs with item m-1-i (the reversed copy of the batch).
std::vector<std::pair<size_t, size_t>> pair_by_reversal(size_t m);

// z_alpha = (1 - alpha) * z_i + alpha * z_j, rowwise over [m, D] tensors.
Tensor mix_latents(const Tensor& z_i, const Tensor& z_j, float alpha);

// Reconstruction target for a mixed pair: i for alpha <= 0.5, else j.
size_t mixing_target(size_t i, size_t j, float alpha);

// MSE between the target image and the decoded mix; gradient w.r.t. xhat_alpha.
std::pair<double, Tensor> mixing_consistency_loss(const Tensor& x_target, const Tensor& xhat_alpha);

// mean over the batch of (alpha_hat_mixed - alpha)^2 + alpha_hat_blend^2.
// Templated so the gradient suite can drive it at 64 bits.
template <typename T>
double discriminator_loss_core(std::span<const T> alpha_hat_mixed, std::span<const T> alpha,
                               std::span<const T> alpha_hat_blend) {
    if (alpha_hat_mixed.size() != alpha.size() || alpha.size() != alpha_hat_blend.size())
        throw ShapeError("discriminator_loss: batch length mismatch");
    const size_t m = alpha.size();
    double acc = 0.0;
    for (size_t s = 0; s < m; ++s) {
        const double d = static_cast<double>(alpha_hat_mixed[s]) - static_cast<double>(alpha[s]);
        const double b = static_cast<double>(alpha_hat_blend[s]);
        acc += d * d + b * b;
    }
    return acc / static_cast<double>(m);
}

double discriminator_loss(const std::vector<float>& alpha_hat_mixed, const std::vector<float>& alpha,
                          const std::vector<float>& alpha_hat_blend);

// Assembles the variant-masked loss breakdown. Masked-off terms are reported
// as zero so the breakdown always sums to the total.
LossBreakdown autoencoder_loss(const Tensor& x_i, const Tensor& xhat_i, const Tensor& xhat_alpha,
                               const std::vector<float>& alpha_hat_mixed, const Tensor& target_x,
                               const TrainConfig& cfg);

// Model parameters plus per-tensor Adam state; owns a training run.
struct Trainer {
    ModelParams model;
    std::vector<AdamState> encoder_w, encoder_b, decoder_w, decoder_b, disc_w, disc_b;

    Trainer(ModelParams m, float lr);
};

// One inner-loop body of the training algorithm on one batch: encode,
// reverse-pair, mix, decode both sets, discriminator on both sets, then a
// discriminator Adam update and an autoencoder Adam update, each computed
// from the same pre-update forward pass with the other side frozen.
// Returns the losses measured before the updates.
LossBreakdown train_step(Trainer& t, const Tensor& batch, const TrainConfig& cfg, RngStream& rng);

// Term-mask override used to verify variant nesting; train_step forwards to
// this with mask_for(cfg.variant). `update_discriminator` mirrors the mask
// origin: baseline leaves omega untouched.
LossBreakdown train_step_masked(Trainer& t, const Tensor& batch, const TrainConfig& cfg,
                                RngStream& rng, TermMask mask, bool update_discriminator);

using EpochCallback = std::function<void(size_t epoch, const LossBreakdown&)>;

// Full training loop: cfg.epochs passes over `images`, order reshuffled each
// epoch from the seeded stream, final short batch included. Returns one mean
// LossBreakdown per epoch.
std::vector<LossBreakdown> train(Trainer& t, const Tensor& images, const TrainConfig& cfg,
                                 const EpochCallback& on_epoch = nullptr);

} // namespace mcdc
