// Synthetic 2-D Gaussian mixtures with known mode centers, and the uniform
// latent sampler. Ring: k modes on a circle; Grid: side x side lattice.
#pragma once

#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include "logan/matrix.hpp"
#include "logan/rng.hpp"

namespace logan {

struct RingArrangement {
    int k = 8;
    double radius = 2.0;
    double sigma = 0.05;
};

struct GridArrangement {
    int side = 5;
    double spacing = 1.0;
    double sigma = 0.05;
};

struct ToyDistribution {
    std::variant<RingArrangement, GridArrangement> arrangement = RingArrangement{};

    double sigma() const;
    void validate() const;  // throws std::invalid_argument
};

// Ring: center_i = radius * (cos(2*pi*i/k), sin(2*pi*i/k)).
// Grid: side x side lattice with the given spacing, centered at the origin.
std::vector<std::array<double, 2>> mode_centers(const ToyDistribution& dist);

// Pick a mode uniformly, add isotropic N(0, sigma^2) noise. n x 2.
Matrix sample_data(const ToyDistribution& dist, std::size_t n, Rng& rng);

// Uniform on [-1, 1]^dim.
struct LatentSpec {
    int dim = 2;
};

Matrix sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng);

// One row per sample, columns as 17-significant-digit decimals.
void write_csv(const std::string& path, const std::string& header, const Matrix& m);
std::string format_g17(double v);

}  // namespace logan
