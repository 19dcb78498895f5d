#include "logan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "logan/toydata.hpp"

namespace logan {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= hyper.alpha * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("train: steps must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw std::invalid_argument("train: adam betas must lie in [0, 1)");
    }
    if (model.hidden_width < 1 || model.hidden_layers < 0) {
        throw std::invalid_argument("train: bad model settings");
    }
    objective.validate();
}

Optimizers make_optimizers(const Bigan& models) {
    return Optimizers{AdamState(models.gen.params.count()), AdamState(models.enc.params.count()),
                      AdamState(models.disc.body.count())};
}

Bigan init_models(const TrainConfig& config, const LatentSpec& latent, Rng& rng) {
    const int data_dim = 2;
    const auto& m = config.model;
    Bigan models;
    models.gen.config = mlp_config(latent.dim, m.hidden_width, m.hidden_layers, data_dim,
                                   OutputActivation::None, m.leaky_slope);
    models.enc.config = mlp_config(data_dim, m.hidden_width, m.hidden_layers, latent.dim,
                                   OutputActivation::Tanh, m.leaky_slope);
    models.disc.config = mlp_config(data_dim + latent.dim, m.hidden_width, m.hidden_layers, 1,
                                    OutputActivation::None, m.leaky_slope);
    models.gen.params = init_mlp(models.gen.config, rng);
    models.enc.params = init_mlp(models.enc.config, rng);
    models.disc.body = init_mlp(models.disc.config, rng);
    return models;
}

void apply_collapse_init(Bigan& models, const ToyDistribution& dist, Rng& rng) {
    // Zero the generator's last affine layer and park its bias on one data
    // point: G emits that point for every z.
    auto& last = models.gen.params.layers.back();
    std::fill(last.w.begin(), last.w.end(), 0.0);
    Matrix point = sample_data(dist, 1, rng);
    for (std::size_t d = 0; d < last.b.size(); ++d) last.b[d] = point.at(0, d);
}

namespace {

void check_finite(double loss, const char* which, int critic_round) {
    if (!std::isfinite(loss)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s loss is non-finite (%g) in critic round %d", which,
                      loss, critic_round);
        throw TrainingDiverged(buf);
    }
}

void apply_adam(MlpParams& params, const std::vector<double>& grads, AdamState& state,
                const AdamHyper& hyper) {
    std::vector<double> flat = flatten_params(params);
    adam_step(flat, grads, state, hyper);
    load_flat(params, flat);
}

}  // namespace

double disc_update(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                   const ToyDistribution& dist, const LatentSpec& latent, AdamState& opt, Rng& rng,
                   Tape& tape, double* penalty_value) {
    const auto m = tape.mark();
    BiganVars vars = lift_bigan(tape, models);
    Matrix x = sample_data(dist, config.batch_size, rng);
    Matrix z = sample_latent(latent, config.batch_size, rng);
    BatchTuples batch(tape, models, vars, std::move(x), std::move(z),
                      UpdateTarget::Discriminator);
    Var loss = total_disc_loss(spec, batch, rng, penalty_value);
    check_finite(loss.value, "discriminator", static_cast<int>(opt.step));
    auto grads = tape.gradients(loss, flat_vars(vars.disc));
    apply_adam(models.disc.body, grads, opt, config.adam);
    tape.rewind(m);
    return loss.value;
}

double gen_enc_update(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                      const ToyDistribution& dist, const LatentSpec& latent, AdamState& opt_gen,
                      AdamState& opt_enc, Rng& rng, Tape& tape) {
    const auto m = tape.mark();
    BiganVars vars = lift_bigan(tape, models);
    Matrix x = sample_data(dist, config.batch_size, rng);
    Matrix z = sample_latent(latent, config.batch_size, rng);
    BatchTuples batch(tape, models, vars, std::move(x), std::move(z),
                      UpdateTarget::GeneratorEncoder);
    Var loss = gen_enc_loss(spec, batch);
    check_finite(loss.value, "generator/encoder", 0);

    std::vector<Var> inputs = flat_vars(vars.gen);
    const std::size_t n_gen = inputs.size();
    const std::vector<Var> enc_vars = flat_vars(vars.enc);
    inputs.insert(inputs.end(), enc_vars.begin(), enc_vars.end());
    auto grads = tape.gradients(loss, inputs);

    std::vector<double> gen_grads(grads.begin(), grads.begin() + n_gen);
    std::vector<double> enc_grads(grads.begin() + n_gen, grads.end());
    apply_adam(models.gen.params, gen_grads, opt_gen, config.adam);
    apply_adam(models.enc.params, enc_grads, opt_enc, config.adam);
    tape.rewind(m);
    return loss.value;
}

StepLosses train_step(Bigan& models, const ObjectiveSpec& spec, const TrainConfig& config,
                      const ToyDistribution& dist, const LatentSpec& latent, Optimizers& opt,
                      Rng& rng, Tape& tape) {
    StepLosses losses;
    for (int k = 0; k < spec.critic_updates_per_gen; ++k) {
        losses.loss_d = disc_update(models, spec, config, dist, latent, opt.disc, rng, tape,
                                    &losses.penalty);
        ++losses.disc_updates;
    }
    losses.loss_eg = gen_enc_update(models, spec, config, dist, latent, opt.gen, opt.enc, rng,
                                    tape);
    return losses;
}

double effective_capture_radius(const EvalSettings& eval, const ToyDistribution& dist) {
    return eval.capture_radius > 0.0 ? eval.capture_radius : 3.0 * dist.sigma();
}

GeneratorEval evaluate_generator(const Bigan& models, const TrainConfig& config,
                                 const ToyDistribution& dist, const LatentSpec& latent,
                                 const EvalSettings& eval, int step) {
    // Separate stream per eval point: evaluation never perturbs training draws.
    Rng eval_rng(config.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(step) + 1)));
    GeneratorEval out;
    out.z = sample_latent(latent, eval.samples, eval_rng);
    out.samples = Matrix(out.z.rows, 2);
    for (std::size_t i = 0; i < out.z.rows; ++i) {
        auto y = forward(models.gen.params, models.gen.config, out.z.row(i));
        out.samples.at(i, 0) = y[0];
        out.samples.at(i, 1) = y[1];
    }
    const auto centers = mode_centers(dist);
    out.coverage = mode_coverage(out.samples, centers, effective_capture_radius(eval, dist),
                                 eval.min_fraction);
    return out;
}

RunArtifacts train(const TrainConfig& config, const ToyDistribution& dist,
                   const LatentSpec& latent, const EvalSettings& eval) {
    config.validate();
    dist.validate();

    Rng rng(config.seed);
    Bigan models = init_models(config, latent, rng);
    if (config.collapse_init) apply_collapse_init(models, dist, rng);

    RunArtifacts art;
    art.config = config;
    art.initial = models;

    Optimizers opt = make_optimizers(models);
    Tape tape;

    for (int step = 1; step <= config.steps; ++step) {
        StepLosses losses;
        try {
            losses = train_step(models, config.objective, config, dist, latent, opt, rng, tape);
        } catch (const TrainingDiverged& e) {
            art.aborted = true;
            art.abort_reason = e.what();
            art.abort_step = step;
            break;
        }
        if (step % config.eval_every == 0 || step == config.steps) {
            auto report = evaluate_generator(models, config, dist, latent, eval, step).coverage;
            art.metrics.push_back(MetricRow{step, losses.loss_d, losses.loss_eg, losses.penalty,
                                            report.modes_captured, report.hq_fraction});
        }
        if (config.snapshot_every > 0 && step % config.snapshot_every == 0) {
            art.snapshots.emplace_back(step, models);
        }
    }
    art.final_models = std::move(models);
    return art;
}

std::string metrics_to_csv(const std::vector<MetricRow>& metrics) {
    std::ostringstream out;
    out << "step,lossD,lossEG,penalty,modes_captured,hq_fraction\n";
    for (const auto& row : metrics) {
        out << row.step << ',' << format_g17(row.loss_d) << ',' << format_g17(row.loss_eg) << ','
            << format_g17(row.penalty) << ',' << row.modes_captured << ','
            << format_g17(row.hq_fraction) << '\n';
    }
    return out.str();
}

}  // namespace logan
