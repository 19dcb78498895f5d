// Adversarial losses and gradient penalties for encoder/generator/joint-
// discriminator triples, built on a tape so parameter gradients (including
// through the gradient-of-logit terms inside penalties) are available.
//
// Tuple convention: the discriminator is pushed toward 1 on encoder tuples
// (x, E(x)) and toward 0 on generator tuples (G(z), z); E and G are trained
// on the reverse objective. Generator/encoder logit losses act on the raw
// pre-activation, never on sigmoid-then-logit.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "logan/matrix.hpp"
#include "logan/mlp.hpp"
#include "logan/rng.hpp"
#include "logan/tape.hpp"

namespace logan {

enum class LossKind { Vanilla, Wasserstein, Lol1, Lol2, DirectModelMse };
enum class PenaltyKind { None, UniformGp, PairwiseGp };

struct ObjectiveSpec {
    LossKind loss_kind = LossKind::Lol1;
    PenaltyKind penalty_kind = PenaltyKind::PairwiseGp;
    double lambda = 0.1;
    int critic_updates_per_gen = 1;
    double mse_weight = 1.0;        // DirectModelMse only
    bool penalize_latent = false;   // pairwise z-side penalty; off for uniform latents
    bool squared_pairwise = false;  // ||grad - unit||^2 instead of ||grad - unit||
    bool saturating_vanilla = false;  // literal minimax 1-D generator form

    void validate() const;  // throws std::invalid_argument
};

// critic_updates_per_gen defaults to 5 for Wasserstein, 1 otherwise.
ObjectiveSpec make_objective(LossKind loss, PenaltyKind penalty);

enum class UpdateTarget { Discriminator, GeneratorEncoder };

// One training batch realized on one tape. Raw samples are held as plain
// matrices; derived quantities -- E(x), G(z), reconstructions, discriminator
// logits -- are built on demand and cached. Under the Discriminator target,
// E(x) and G(z) enter the graph as constants (no gradient reaches E or G);
// under GeneratorEncoder they are recorded through the lifted networks.
class BatchTuples {
public:
    BatchTuples(Tape& tape, const Bigan& models, const BiganVars& vars, Matrix x, Matrix z,
                UpdateTarget target);

    std::size_t size() const { return x_.rows; }
    UpdateTarget target() const { return target_; }
    Tape& tape() { return *tape_; }
    const Bigan& models() const { return *models_; }
    const BiganVars& vars() const { return *vars_; }
    const Matrix& x() const { return x_; }
    const Matrix& z() const { return z_; }

    const std::vector<std::vector<Var>>& x_lifted();
    const std::vector<std::vector<Var>>& z_lifted();
    const std::vector<std::vector<Var>>& encoded();    // E(x_i)
    const std::vector<std::vector<Var>>& generated();  // G(z_i)
    const std::vector<Var>& disc_real();               // disc_logit(x_i, E(x_i))
    const std::vector<Var>& disc_fake();               // disc_logit(G(z_i), z_i)
    const std::vector<std::vector<Var>>& recon_x();    // G(E(x_i)) through the nets
    const std::vector<std::vector<Var>>& recon_z();    // E(G(z_i))

    // Tape-free values; bit-identical to the recorded forwards.
    const Matrix& encoded_values();
    const Matrix& generated_values();
    const Matrix& recon_x_values();  // G(E(x))
    const Matrix& recon_z_values();  // E(G(z))

private:
    Tape* tape_;
    const Bigan* models_;
    const BiganVars* vars_;
    Matrix x_, z_;
    UpdateTarget target_;

    std::optional<std::vector<std::vector<Var>>> x_lifted_, z_lifted_, encoded_, generated_,
        recon_x_, recon_z_;
    std::optional<std::vector<Var>> disc_real_, disc_fake_;
    std::optional<Matrix> encoded_values_, generated_values_, recon_x_values_, recon_z_values_;
};

// sqrt(sum v_i^2), with the zero vector mapped to 0 (subgradient choice; sqrt
// alone has no derivative there).
Var l2_norm(Tape& tape, std::span<const Var> v);

// -mean[log D(x,E(x))] - mean[log(1 - D(G(z),z))], probabilities clamped.
Var disc_loss_vanilla(BatchTuples& batch);

// Non-saturating by default: -mean[log D(G(z),z)] - mean[log(1 - D(x,E(x)))].
// The saturating flag selects the literal minimax form instead.
Var gen_enc_loss_vanilla(BatchTuples& batch, bool saturating = false);

// Critic loss mean[logit_fake] - mean[logit_real]; the E,G loss is its
// negation (each network sees only the term it influences).
Var disc_loss_wasserstein(BatchTuples& batch);
Var gen_enc_loss_wasserstein(BatchTuples& batch);

// mean[logit_real] - mean[logit_fake] on pre-activations: E descends the
// discriminator terrain on real tuples, G ascends it on fakes, and no
// sigmoid saturation can null the gradients.
Var gen_enc_loss_logit(BatchTuples& batch);

// mean[D(G(z),z)^2] + mean[(1 - D(x,E(x)))^2] on sigmoid outputs.
Var disc_loss_lol2(BatchTuples& batch);

// mean L1 |x - G(E(x))| plus mean L1 |z - E(G(z))|; the direct-modeling
// baseline added to a vanilla adversarial loss.
Var direct_model_mse(BatchTuples& batch);

// (||grad_logit at a uniform interpolate of the joint tuples|| - 1)^2,
// epsilon drawn per pair. A zero gradient is fine (penalty -> 1).
Var uniform_gp(BatchTuples& batch, Rng& rng);
Var uniform_gp_with_eps(BatchTuples& batch, std::span<const double> eps);

// Pair-wise penalty in data space: per sample, with x_hat = G(E(x)) and
// x_tilde = eps*x + (1-eps)*x_hat,
//     || grad_{x_tilde} logit D(x_tilde, E(x)) - (x - x_hat)/||x - x_hat|| ||
// averaged over the batch. E(x) is held fixed in the second slot. Samples
// with ||x - x_hat|| < 1e-12 are treated as already coupled and skipped
// (the mean runs over the contributing samples).
Var pairwise_gp_x(BatchTuples& batch, Rng& rng, bool squared = false);
Var pairwise_gp_x_with_eps(BatchTuples& batch, std::span<const double> eps, bool squared = false);

// Latent-space mirror with z_hat = E(G(z)) and the gradient negated:
//     || -grad_{z_tilde} logit D(G(z), z_tilde) - (z - z_hat)/||z - z_hat|| ||
Var pairwise_gp_z(BatchTuples& batch, Rng& rng, bool squared = false);
Var pairwise_gp_z_with_eps(BatchTuples& batch, std::span<const double> eps, bool squared = false);

// Adversarial term selected by loss_kind plus lambda times the selected
// penalties. penalty_value, when given, receives the unweighted penalty sum.
Var total_disc_loss(const ObjectiveSpec& spec, BatchTuples& batch, Rng& rng,
                    double* penalty_value = nullptr);

// E,G-side loss for the configured loss kind (logit loss for Lol1/Lol2,
// vanilla + mse_weight * reconstruction for DirectModelMse).
Var gen_enc_loss(const ObjectiveSpec& spec, BatchTuples& batch);

}  // namespace logan
