#include "logan/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace logan {

void ObjectiveSpec::validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("objective: lambda must be >= 0");
    if (critic_updates_per_gen < 1) {
        throw std::invalid_argument("objective: critic_updates_per_gen must be >= 1");
    }
    if (!(mse_weight >= 0.0)) throw std::invalid_argument("objective: mse_weight must be >= 0");
}

ObjectiveSpec make_objective(LossKind loss, PenaltyKind penalty) {
    ObjectiveSpec spec;
    spec.loss_kind = loss;
    spec.penalty_kind = penalty;
    spec.critic_updates_per_gen = loss == LossKind::Wasserstein ? 5 : 1;
    return spec;
}

BatchTuples::BatchTuples(Tape& tape, const Bigan& models, const BiganVars& vars, Matrix x,
                         Matrix z, UpdateTarget target)
    : tape_(&tape), models_(&models), vars_(&vars), x_(std::move(x)), z_(std::move(z)),
      target_(target) {
    if (x_.rows == 0 || x_.rows != z_.rows) {
        throw std::invalid_argument("BatchTuples: need equal, nonzero x and z batch sizes");
    }
    if (static_cast<int>(x_.cols) != models_->enc.config.input_dim() ||
        static_cast<int>(z_.cols) != models_->gen.config.input_dim()) {
        throw std::invalid_argument("BatchTuples: sample dimensions do not match the models");
    }
}

namespace {

std::vector<std::vector<Var>> lift_rows(Tape& tape, const Matrix& m) {
    std::vector<std::vector<Var>> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        out[i].reserve(m.cols);
        for (double v : m.row(i)) out[i].push_back(tape.lift(v));
    }
    return out;
}

Matrix forward_rows(const Mlp& net, const Matrix& in) {
    Matrix out(in.rows, net.config.output_dim());
    for (std::size_t i = 0; i < in.rows; ++i) {
        auto y = forward(net.params, net.config, in.row(i));
        std::copy(y.begin(), y.end(), out.row(i).begin());
    }
    return out;
}

Var mean_of(Tape& tape, std::span<const Var> terms) {
    Var acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = tape.add(acc, terms[i]);
    return tape.mul_const(acc, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

const std::vector<std::vector<Var>>& BatchTuples::x_lifted() {
    if (!x_lifted_) x_lifted_ = lift_rows(*tape_, x_);
    return *x_lifted_;
}

const std::vector<std::vector<Var>>& BatchTuples::z_lifted() {
    if (!z_lifted_) z_lifted_ = lift_rows(*tape_, z_);
    return *z_lifted_;
}

const std::vector<std::vector<Var>>& BatchTuples::encoded() {
    if (!encoded_) {
        if (target_ == UpdateTarget::GeneratorEncoder) {
            std::vector<std::vector<Var>> e(size());
            for (std::size_t i = 0; i < size(); ++i) {
                e[i] = forward(vars_->enc, models_->enc.config, x_lifted()[i], *tape_);
            }
            encoded_ = std::move(e);
        } else {
            encoded_ = lift_rows(*tape_, encoded_values());
        }
    }
    return *encoded_;
}

const std::vector<std::vector<Var>>& BatchTuples::generated() {
    if (!generated_) {
        if (target_ == UpdateTarget::GeneratorEncoder) {
            std::vector<std::vector<Var>> g(size());
            for (std::size_t i = 0; i < size(); ++i) {
                g[i] = forward(vars_->gen, models_->gen.config, z_lifted()[i], *tape_);
            }
            generated_ = std::move(g);
        } else {
            generated_ = lift_rows(*tape_, generated_values());
        }
    }
    return *generated_;
}

const std::vector<Var>& BatchTuples::disc_real() {
    if (!disc_real_) {
        std::vector<Var> d;
        d.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            d.push_back(disc_logit(vars_->disc, models_->disc.config, x_lifted()[i], encoded()[i],
                                   *tape_));
        }
        disc_real_ = std::move(d);
    }
    return *disc_real_;
}

const std::vector<Var>& BatchTuples::disc_fake() {
    if (!disc_fake_) {
        std::vector<Var> d;
        d.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            d.push_back(disc_logit(vars_->disc, models_->disc.config, generated()[i], z_lifted()[i],
                                   *tape_));
        }
        disc_fake_ = std::move(d);
    }
    return *disc_fake_;
}

const std::vector<std::vector<Var>>& BatchTuples::recon_x() {
    if (!recon_x_) {
        std::vector<std::vector<Var>> r(size());
        for (std::size_t i = 0; i < size(); ++i) {
            r[i] = forward(vars_->gen, models_->gen.config, encoded()[i], *tape_);
        }
        recon_x_ = std::move(r);
    }
    return *recon_x_;
}

const std::vector<std::vector<Var>>& BatchTuples::recon_z() {
    if (!recon_z_) {
        std::vector<std::vector<Var>> r(size());
        for (std::size_t i = 0; i < size(); ++i) {
            r[i] = forward(vars_->enc, models_->enc.config, generated()[i], *tape_);
        }
        recon_z_ = std::move(r);
    }
    return *recon_z_;
}

const Matrix& BatchTuples::encoded_values() {
    if (!encoded_values_) encoded_values_ = forward_rows(models_->enc, x_);
    return *encoded_values_;
}

const Matrix& BatchTuples::generated_values() {
    if (!generated_values_) generated_values_ = forward_rows(models_->gen, z_);
    return *generated_values_;
}

const Matrix& BatchTuples::recon_x_values() {
    if (!recon_x_values_) recon_x_values_ = forward_rows(models_->gen, encoded_values());
    return *recon_x_values_;
}

const Matrix& BatchTuples::recon_z_values() {
    if (!recon_z_values_) recon_z_values_ = forward_rows(models_->enc, generated_values());
    return *recon_z_values_;
}

Var l2_norm(Tape& tape, std::span<const Var> v) {
    Var ssq = tape.square(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) ssq = tape.fma(v[i], v[i], ssq);
    if (ssq.value == 0.0) return tape.lift(0.0);
    return tape.sqrt(ssq);
}

Var disc_loss_vanilla(BatchTuples& batch) {
    Tape& tape = batch.tape();
    const auto& real = batch.disc_real();
    const auto& fake = batch.disc_fake();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Var pr = clamp_prob(sigmoid(real[i]));
        Var pf = clamp_prob(sigmoid(fake[i]));
        terms.push_back(tape.neg(tape.add(ln(pr), ln(1.0 - pf))));
    }
    return mean_of(tape, terms);
}

Var gen_enc_loss_vanilla(BatchTuples& batch, bool saturating) {
    Tape& tape = batch.tape();
    const auto& real = batch.disc_real();
    const auto& fake = batch.disc_fake();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Var pr = clamp_prob(sigmoid(real[i]));
        Var pf = clamp_prob(sigmoid(fake[i]));
        if (saturating) {
            // Literal minimax form: minimize log D(real) + log(1 - D(fake)).
            terms.push_back(tape.add(ln(pr), ln(1.0 - pf)));
        } else {
            terms.push_back(tape.neg(tape.add(ln(pf), ln(1.0 - pr))));
        }
    }
    return mean_of(tape, terms);
}

Var disc_loss_wasserstein(BatchTuples& batch) {
    Tape& tape = batch.tape();
    const auto& real = batch.disc_real();
    const auto& fake = batch.disc_fake();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) terms.push_back(tape.sub(fake[i], real[i]));
    return mean_of(tape, terms);
}

Var gen_enc_loss_wasserstein(BatchTuples& batch) { return gen_enc_loss_logit(batch); }

Var gen_enc_loss_logit(BatchTuples& batch) {
    Tape& tape = batch.tape();
    const auto& real = batch.disc_real();
    const auto& fake = batch.disc_fake();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) terms.push_back(tape.sub(real[i], fake[i]));
    return mean_of(tape, terms);
}

Var disc_loss_lol2(BatchTuples& batch) {
    Tape& tape = batch.tape();
    const auto& real = batch.disc_real();
    const auto& fake = batch.disc_fake();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Var df = sigmoid(fake[i]);
        Var dr = sigmoid(real[i]);
        terms.push_back(tape.add(square(df), square(1.0 - dr)));
    }
    return mean_of(tape, terms);
}

Var direct_model_mse(BatchTuples& batch) {
    Tape& tape = batch.tape();
    const auto& xhat = batch.recon_x();
    const auto& zhat = batch.recon_z();
    const auto& xl = batch.x_lifted();
    const auto& zl = batch.z_lifted();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Var t = abs(tape.sub(xl[i][0], xhat[i][0]));
        for (std::size_t d = 1; d < xl[i].size(); ++d) {
            t = tape.add(t, abs(tape.sub(xl[i][d], xhat[i][d])));
        }
        for (std::size_t d = 0; d < zl[i].size(); ++d) {
            t = tape.add(t, abs(tape.sub(zl[i][d], zhat[i][d])));
        }
        terms.push_back(t);
    }
    return mean_of(tape, terms);
}

namespace {

// Interpolated tuple lifted as fresh leaves: the differentiation roots of
// every gradient penalty.
std::vector<Var> lift_interp(Tape& tape, std::span<const double> a, std::span<const double> b,
                             double eps) {
    std::vector<Var> out;
    out.reserve(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
        out.push_back(tape.lift(eps * a[d] + (1.0 - eps) * b[d]));
    }
    return out;
}

std::vector<double> draw_eps(Rng& rng, std::size_t n) {
    std::vector<double> eps(n);
    for (double& e : eps) e = rng.uniform01();
    return eps;
}

}  // namespace

Var uniform_gp_with_eps(BatchTuples& batch, std::span<const double> eps) {
    Tape& tape = batch.tape();
    const Matrix& x = batch.x();
    const Matrix& z = batch.z();
    const Matrix& ex = batch.encoded_values();
    const Matrix& gz = batch.generated_values();
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        // Joint interpolate between the real tuple (x, E(x)) and the fake
        // tuple (G(z), z).
        std::vector<Var> xt = lift_interp(tape, x.row(i), gz.row(i), eps[i]);
        std::vector<Var> zt = lift_interp(tape, ex.row(i), z.row(i), eps[i]);
        std::vector<Var> inputs = xt;
        inputs.insert(inputs.end(), zt.begin(), zt.end());
        Var out = disc_logit(batch.vars().disc, batch.models().disc.config, xt, zt, tape);
        auto grad = tape.gradients_recorded(out, inputs);
        Var nrm = l2_norm(tape, grad);
        terms.push_back(square(nrm - 1.0));
    }
    return mean_of(tape, terms);
}

Var uniform_gp(BatchTuples& batch, Rng& rng) {
    auto eps = draw_eps(rng, batch.size());
    return uniform_gp_with_eps(batch, eps);
}

namespace {

// Shared body of the two pair-wise penalties. `latent_side` picks z-slot
// interpolation (with negated gradient), x-slot otherwise.
Var pairwise_gp_impl(BatchTuples& batch, std::span<const double> eps, bool squared,
                     bool latent_side) {
    Tape& tape = batch.tape();
    const Matrix& target = latent_side ? batch.z() : batch.x();
    const Matrix& recon = latent_side ? batch.recon_z_values() : batch.recon_x_values();
    const Matrix& fixed = latent_side ? batch.generated_values() : batch.encoded_values();
    const std::size_t dim = target.cols;

    std::vector<Var> terms;
    terms.reserve(batch.size());
    std::vector<double> unit(dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double dist_sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            unit[d] = target.at(i, d) - recon.at(i, d);
            dist_sq += unit[d] * unit[d];
        }
        const double dist = std::sqrt(dist_sq);
        if (dist < 1e-12) continue;  // already coupled
        for (std::size_t d = 0; d < dim; ++d) unit[d] /= dist;

        std::vector<Var> interp = lift_interp(tape, target.row(i), recon.row(i), eps[i]);
        std::vector<Var> fixed_vars;
        fixed_vars.reserve(fixed.cols);
        for (double v : fixed.row(i)) fixed_vars.push_back(tape.lift(v));

        Var out = latent_side
                      ? disc_logit(batch.vars().disc, batch.models().disc.config, fixed_vars,
                                   interp, tape)
                      : disc_logit(batch.vars().disc, batch.models().disc.config, interp,
                                   fixed_vars, tape);
        auto grad = tape.gradients_recorded(out, interp);

        Var diff0 = latent_side ? tape.neg(grad[0]) - unit[0] : grad[0] - unit[0];
        Var ssq = square(diff0);
        for (std::size_t d = 1; d < dim; ++d) {
            Var diff = latent_side ? tape.neg(grad[d]) - unit[d] : grad[d] - unit[d];
            ssq = tape.fma(diff, diff, ssq);
        }
        if (squared) {
            terms.push_back(ssq);
        } else {
            terms.push_back(ssq.value == 0.0 ? tape.lift(0.0) : tape.sqrt(ssq));
        }
    }
    if (terms.empty()) return tape.lift(0.0);
    return mean_of(tape, terms);
}

}  // namespace

Var pairwise_gp_x_with_eps(BatchTuples& batch, std::span<const double> eps, bool squared) {
    return pairwise_gp_impl(batch, eps, squared, /*latent_side=*/false);
}

Var pairwise_gp_x(BatchTuples& batch, Rng& rng, bool squared) {
    auto eps = draw_eps(rng, batch.size());
    return pairwise_gp_x_with_eps(batch, eps, squared);
}

Var pairwise_gp_z_with_eps(BatchTuples& batch, std::span<const double> eps, bool squared) {
    return pairwise_gp_impl(batch, eps, squared, /*latent_side=*/true);
}

Var pairwise_gp_z(BatchTuples& batch, Rng& rng, bool squared) {
    auto eps = draw_eps(rng, batch.size());
    return pairwise_gp_z_with_eps(batch, eps, squared);
}

Var total_disc_loss(const ObjectiveSpec& spec, BatchTuples& batch, Rng& rng,
                    double* penalty_value) {
    spec.validate();
    Tape& tape = batch.tape();
    Var adv = [&] {
        switch (spec.loss_kind) {
            case LossKind::Wasserstein: return disc_loss_wasserstein(batch);
            case LossKind::Lol2: return disc_loss_lol2(batch);
            case LossKind::Vanilla:
            case LossKind::Lol1:
            case LossKind::DirectModelMse: return disc_loss_vanilla(batch);
        }
        return disc_loss_vanilla(batch);
    }();

    if (penalty_value) *penalty_value = 0.0;
    if (spec.penalty_kind == PenaltyKind::None || spec.lambda == 0.0) return adv;

    Var penalty = [&] {
        if (spec.penalty_kind == PenaltyKind::UniformGp) return uniform_gp(batch, rng);
        Var p = pairwise_gp_x(batch, rng, spec.squared_pairwise);
        if (spec.penalize_latent) {
            p = tape.add(p, pairwise_gp_z(batch, rng, spec.squared_pairwise));
        }
        return p;
    }();
    if (penalty_value) *penalty_value = penalty.value;
    return tape.add(adv, tape.mul_const(penalty, spec.lambda));
}

Var gen_enc_loss(const ObjectiveSpec& spec, BatchTuples& batch) {
    spec.validate();
    switch (spec.loss_kind) {
        case LossKind::Vanilla:
            return gen_enc_loss_vanilla(batch, spec.saturating_vanilla);
        case LossKind::Wasserstein:
            return gen_enc_loss_wasserstein(batch);
        case LossKind::Lol1:
        case LossKind::Lol2:
            return gen_enc_loss_logit(batch);
        case LossKind::DirectModelMse: {
            Tape& tape = batch.tape();
            Var adv = gen_enc_loss_vanilla(batch, spec.saturating_vanilla);
            return tape.add(adv, tape.mul_const(direct_model_mse(batch), spec.mse_weight));
        }
    }
    return gen_enc_loss_logit(batch);
}

}  // namespace logan
