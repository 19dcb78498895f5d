// Mode-coverage and inversion metrics, discriminator contour extraction, and
// the bounded-gradient escape analysis.
#pragma once

#include <array>
#include <span>
#include <vector>

#include "logan/matrix.hpp"
#include "logan/mlp.hpp"

namespace logan {

struct ModeCoverageReport {
    std::vector<int> per_mode_counts;
    int modes_captured = 0;   // modes with count/n_samples >= min_fraction
    double hq_fraction = 0.0;  // fraction of samples within capture_radius of any center
    int n_samples = 0;
    double capture_radius = 0.0;
    double min_fraction = 0.0;
};

// Each sample is assigned to the nearest center if within capture_radius;
// exact distance ties go to the lower center index.
ModeCoverageReport mode_coverage(const Matrix& samples,
                                 std::span<const std::array<double, 2>> centers,
                                 double capture_radius, double min_fraction);

struct InversionError {
    double x_l2 = 0.0;  // mean ||x - G(E(x))||
    double z_l2 = 0.0;  // mean ||z - E(G(z))||
};

InversionError inversion_error(const Mlp& gen, const Mlp& enc, const Matrix& samples,
                               const Matrix& latents);

struct Bounds {
    double x_min = -3.0, x_max = 3.0;
    double y_min = -3.0, y_max = 3.0;
};

struct ContourGrid {
    Bounds bounds;
    int nx = 0, ny = 0;
    std::vector<double> values;  // row-major, values[iy*nx + ix], pre-activation D
};

// disc_logit(x, E(x)) on an inclusive lattice over bounds.
ContourGrid contour_grid(const JointDiscriminator& disc, const Mlp& enc, Bounds bounds, int nx,
                         int ny);
// disc_logit(x, z0) slice for a fixed latent.
ContourGrid contour_grid(const JointDiscriminator& disc, std::span<const double> z_slice,
                         Bounds bounds, int nx, int ny);

// Discriminator value below which a bounded L1 reconstruction gradient can no
// longer overcome the adversarial gradient: 1 / (2 * n_dims * lambda).
double d_crit(int n_dims, double lambda_mse);

// 1-D two-peak landscape: D(t) = min(peak_height, valley_depth + |t|) between
// the peaks at t = -1 and t = +1; unit-slope walls match a gradient-penalized
// discriminator. A reconstruction starts on the left peak, its coupled data
// point sits on the right peak.
struct EscapeLandscape {
    double valley_depth = 1.0;
    double peak_height = 0.0;  // <= 0: valley_depth + 1
    int n_dims = 2;
    double lambda_mse = 0.1;
};

enum class EscapeMethod { MsePull, PairwiseGpField };

struct EscapeResult {
    bool crossed = false;
    double final_gap = 0.0;
};

// Follows the gradient field with step 1e-3 for at most 1e6 steps.
// MsePull: bounded pull 2*N*lambda against the -D'/D adversarial slope.
// PairwiseGpField: unit slope toward the coupled point everywhere.
EscapeResult escape_experiment(const EscapeLandscape& landscape, EscapeMethod method);

}  // namespace logan
