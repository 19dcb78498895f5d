#include "logan/toydata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace logan {

double ToyDistribution::sigma() const {
    return std::visit([](const auto& a) { return a.sigma; }, arrangement);
}

void ToyDistribution::validate() const {
    if (const auto* ring = std::get_if<RingArrangement>(&arrangement)) {
        if (ring->k < 1) throw std::invalid_argument("ring: mode count must be >= 1");
        if (!(ring->sigma > 0.0)) throw std::invalid_argument("ring: sigma must be > 0");
        if (ring->k > 1 && !(ring->radius > 0.0)) {
            throw std::invalid_argument("ring: radius must be > 0 for distinct centers");
        }
    } else {
        const auto& grid = std::get<GridArrangement>(arrangement);
        if (grid.side < 1) throw std::invalid_argument("grid: side must be >= 1");
        if (!(grid.sigma > 0.0)) throw std::invalid_argument("grid: sigma must be > 0");
        if (grid.side > 1 && !(grid.spacing > 0.0)) {
            throw std::invalid_argument("grid: spacing must be > 0 for distinct centers");
        }
    }
}

std::vector<std::array<double, 2>> mode_centers(const ToyDistribution& dist) {
    dist.validate();
    std::vector<std::array<double, 2>> centers;
    if (const auto* ring = std::get_if<RingArrangement>(&dist.arrangement)) {
        centers.reserve(ring->k);
        for (int i = 0; i < ring->k; ++i) {
            const double theta = 2.0 * M_PI * i / ring->k;
            centers.push_back({ring->radius * std::cos(theta), ring->radius * std::sin(theta)});
        }
    } else {
        const auto& grid = std::get<GridArrangement>(dist.arrangement);
        const double offset = 0.5 * (grid.side - 1) * grid.spacing;
        centers.reserve(static_cast<std::size_t>(grid.side) * grid.side);
        for (int r = 0; r < grid.side; ++r) {
            for (int c = 0; c < grid.side; ++c) {
                centers.push_back({c * grid.spacing - offset, r * grid.spacing - offset});
            }
        }
    }
    return centers;
}

Matrix sample_data(const ToyDistribution& dist, std::size_t n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_data: n must be >= 1");
    const auto centers = mode_centers(dist);
    const double sigma = dist.sigma();
    Matrix m(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[rng.below(centers.size())];
        m.at(i, 0) = c[0] + rng.normal(0.0, sigma);
        m.at(i, 1) = c[1] + rng.normal(0.0, sigma);
    }
    return m;
}

Matrix sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng) {
    if (spec.dim < 1) throw std::invalid_argument("sample_latent: dim must be >= 1");
    Matrix m(n, spec.dim);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::string& header, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << header << '\n';
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out << ',';
            out << format_g17(m.at(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace logan
