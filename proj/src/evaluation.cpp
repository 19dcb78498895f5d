#include "logan/evaluation.hpp"

#include <cmath>
#include <stdexcept>

namespace logan {

ModeCoverageReport mode_coverage(const Matrix& samples,
                                 std::span<const std::array<double, 2>> centers,
                                 double capture_radius, double min_fraction) {
    if (centers.empty()) throw std::invalid_argument("mode_coverage: no centers given");
    if (!(capture_radius > 0.0)) {
        throw std::invalid_argument("mode_coverage: capture_radius must be > 0");
    }
    if (samples.cols != 2) throw std::invalid_argument("mode_coverage: samples must be n x 2");

    ModeCoverageReport report;
    report.per_mode_counts.assign(centers.size(), 0);
    report.n_samples = static_cast<int>(samples.rows);
    report.capture_radius = capture_radius;
    report.min_fraction = min_fraction;

    const double r2 = capture_radius * capture_radius;
    for (std::size_t i = 0; i < samples.rows; ++i) {
        const double sx = samples.at(i, 0);
        const double sy = samples.at(i, 1);
        int best = -1;
        double best_d2 = r2;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double dx = sx - centers[c][0];
            const double dy = sy - centers[c][1];
            const double d2 = dx * dx + dy * dy;
            // <= r2 admits the boundary; strict < keeps the lower index on ties.
            if (d2 <= best_d2 && (best < 0 || d2 < best_d2)) {
                best = static_cast<int>(c);
                best_d2 = d2;
            }
        }
        if (best >= 0) ++report.per_mode_counts[best];
    }

    int captured = 0;
    long assigned = 0;
    for (int c : report.per_mode_counts) {
        assigned += c;
        if (samples.rows > 0 &&
            static_cast<double>(c) / static_cast<double>(samples.rows) >= min_fraction) {
            ++captured;
        }
    }
    report.modes_captured = captured;
    report.hq_fraction =
        samples.rows == 0 ? 0.0 : static_cast<double>(assigned) / static_cast<double>(samples.rows);
    return report;
}

InversionError inversion_error(const Mlp& gen, const Mlp& enc, const Matrix& samples,
                               const Matrix& latents) {
    InversionError err;
    for (std::size_t i = 0; i < samples.rows; ++i) {
        auto e = forward(enc.params, enc.config, samples.row(i));
        auto xhat = forward(gen.params, gen.config, e);
        double ssq = 0.0;
        for (std::size_t d = 0; d < xhat.size(); ++d) {
            const double diff = samples.at(i, d) - xhat[d];
            ssq += diff * diff;
        }
        err.x_l2 += std::sqrt(ssq);
    }
    if (samples.rows) err.x_l2 /= static_cast<double>(samples.rows);

    for (std::size_t i = 0; i < latents.rows; ++i) {
        auto g = forward(gen.params, gen.config, latents.row(i));
        auto zhat = forward(enc.params, enc.config, g);
        double ssq = 0.0;
        for (std::size_t d = 0; d < zhat.size(); ++d) {
            const double diff = latents.at(i, d) - zhat[d];
            ssq += diff * diff;
        }
        err.z_l2 += std::sqrt(ssq);
    }
    if (latents.rows) err.z_l2 /= static_cast<double>(latents.rows);
    return err;
}

namespace {

template <class LogitAt>
ContourGrid fill_grid(Bounds bounds, int nx, int ny, LogitAt logit_at) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("contour_grid: resolution must be >= 1");
    ContourGrid grid;
    grid.bounds = bounds;
    grid.nx = nx;
    grid.ny = ny;
    grid.values.resize(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        const double y =
            ny == 1 ? bounds.y_min : bounds.y_min + (bounds.y_max - bounds.y_min) * iy / (ny - 1);
        for (int ix = 0; ix < nx; ++ix) {
            const double x = nx == 1 ? bounds.x_min
                                     : bounds.x_min + (bounds.x_max - bounds.x_min) * ix / (nx - 1);
            grid.values[static_cast<std::size_t>(iy) * nx + ix] = logit_at(x, y);
        }
    }
    return grid;
}

}  // namespace

ContourGrid contour_grid(const JointDiscriminator& disc, const Mlp& enc, Bounds bounds, int nx,
                         int ny) {
    return fill_grid(bounds, nx, ny, [&](double x, double y) {
        const double point[2] = {x, y};
        auto e = forward(enc.params, enc.config, point);
        return disc_logit(disc, point, e);
    });
}

ContourGrid contour_grid(const JointDiscriminator& disc, std::span<const double> z_slice,
                         Bounds bounds, int nx, int ny) {
    return fill_grid(bounds, nx, ny, [&](double x, double y) {
        const double point[2] = {x, y};
        return disc_logit(disc, point, z_slice);
    });
}

double d_crit(int n_dims, double lambda_mse) {
    if (n_dims < 1) throw std::invalid_argument("d_crit: n_dims must be >= 1");
    if (!(lambda_mse > 0.0)) throw std::invalid_argument("d_crit: lambda must be > 0");
    return 1.0 / (2.0 * n_dims * lambda_mse);
}

EscapeResult escape_experiment(const EscapeLandscape& landscape, EscapeMethod method) {
    const double depth = landscape.valley_depth;
    const double peak = landscape.peak_height > 0.0 ? landscape.peak_height : depth + 1.0;
    const double target = 1.0;
    const double pull = 2.0 * landscape.n_dims * landscape.lambda_mse;

    auto d_value = [&](double t) {
        const double v = depth + std::abs(t);
        return v < peak ? v : peak;
    };
    auto d_slope = [&](double t) {
        if (depth + std::abs(t) >= peak) return 0.0;  // plateau
        return t < 0.0 ? -1.0 : 1.0;
    };

    const double step = 1e-3;
    const long budget = 1000000;
    double t = -1.0;
    for (long i = 0; i < budget && t < target; ++i) {
        double v;
        if (method == EscapeMethod::PairwiseGpField) {
            // The pair-wise penalty shapes a unit logit slope toward the
            // coupled point, so the pull never decays.
            v = 1.0;
        } else {
            // Descend -log D(t) + pull-term: v = pull + D'(t)/D(t).
            v = pull + d_slope(t) / d_value(t);
        }
        t += step * v;
    }
    EscapeResult result;
    result.crossed = t >= target;
    result.final_gap = result.crossed ? 0.0 : target - t;
    return result;
}

}  // namespace logan
