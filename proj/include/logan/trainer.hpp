// Deterministic adversarial training loop: Adam, alternating discriminator /
// joint (E,G) updates, tape rewound after every update. One run owns one rng,
// one tape and one thread; (config, code) fully determine every trace.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "logan/evaluation.hpp"
#include "logan/mlp.hpp"
#include "logan/objectives.hpp"
#include "logan/rng.hpp"
#include "logan/tape.hpp"
#include "logan/toydata.hpp"

namespace logan {

struct AdamHyper {
    double alpha = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard bias-corrected Adam over a flat parameter view.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

struct ModelSettings {
    int hidden_width = 64;
    int hidden_layers = 3;  // 4 affine layers total
    double leaky_slope = 0.2;
};

struct TrainConfig {
    int steps = 40000;
    int batch_size = 256;
    AdamHyper adam;
    ObjectiveSpec objective;
    std::uint64_t seed = 1;
    int eval_every = 1000;
    int snapshot_every = 0;  // 0: keep only the initial and final snapshots
    bool collapse_init = false;  // start G collapsed to one data-space point
    ModelSettings model;

    void validate() const;
};

struct EvalSettings {
    int samples = 10000;
    double capture_radius = 0.0;  // <= 0: 3 * sigma of the data distribution
    double min_fraction = 0.01;
};

// Thrown when a loss turns non-finite; train() converts it into an aborted
// RunArtifacts carrying the diagnostic snapshot.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Optimizers {
    AdamState gen, enc, disc;
};

Optimizers make_optimizers(const Bigan& models);

// G: latent -> data (no output activation), E: data -> latent (tanh, so
// encodings stay inside the uniform latent box), D: joint -> 1 logit.
Bigan init_models(const TrainConfig& config, const LatentSpec& latent, Rng& rng);
void apply_collapse_init(Bigan& models, const ToyDistribution& dist, Rng& rng);

struct StepLosses {
    double loss_d = 0.0;
    double loss_eg = 0.0;
    double penalty = 0.0;  // unweighted penalty term of the last D update
    int disc_updates = 0;
};

// One discriminator update on a fresh batch; only D parameters change.
double disc_update(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                   const ToyDistribution& dist, const LatentSpec& latent, AdamState& opt,
                   Rng& rng, Tape& tape, double* penalty_value = nullptr);

// One joint E,G update (single combined loss, one Adam step per network).
double gen_enc_update(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                      const ToyDistribution& dist, const LatentSpec& latent, AdamState& opt_gen,
                      AdamState& opt_enc, Rng& rng, Tape& tape);

// critic_updates_per_gen discriminator updates, then one E,G update.
StepLosses train_step(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                      const ToyDistribution& dist, const LatentSpec& latent, Optimizers& opt,
                      Rng& rng, Tape& tape);

struct MetricRow {
    int step = 0;
    double loss_d = 0.0;
    double loss_eg = 0.0;
    double penalty = 0.0;
    int modes_captured = 0;
    double hq_fraction = 0.0;
};

struct RunArtifacts {
    TrainConfig config;
    std::vector<MetricRow> metrics;
    Bigan initial;
    Bigan final_models;
    std::vector<std::pair<int, Bigan>> snapshots;  // populated when snapshot_every > 0
    bool aborted = false;
    std::string abort_reason;
    int abort_step = -1;
};

// Deterministic per-eval-point generator scoring: its own rng stream derived
// from (seed, step), so re-scoring a snapshot reproduces the training-time
// metrics row exactly.
struct GeneratorEval {
    Matrix z;
    Matrix samples;  // G(z)
    ModeCoverageReport coverage;
};

GeneratorEval evaluate_generator(const Bigan& models, const TrainConfig& config,
                                 const ToyDistribution& dist, const LatentSpec& latent,
                                 const EvalSettings& eval, int step);

// Full loop with mode-coverage evaluation every eval_every steps and at the
// final step. A diverged run returns partial artifacts with aborted set.
RunArtifacts train(const TrainConfig& config, const ToyDistribution& dist,
                   const LatentSpec& latent, const EvalSettings& eval);

// metrics.csv body: header plus one row per eval point, %.17g columns.
std::string metrics_to_csv(const std::vector<MetricRow>& metrics);

double effective_capture_radius(const EvalSettings& eval, const ToyDistribution& dist);

}  // namespace logan
