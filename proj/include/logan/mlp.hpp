// Small dense perceptrons: generator G(z), encoder E(x) and the joint
// discriminator D(x, z) are all instances of the same 4-layer LeakyReLU MLP.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "logan/rng.hpp"
#include "logan/tape.hpp"

namespace logan {

enum class OutputActivation { None, Sigmoid, Tanh };

struct MlpConfig {
    std::vector<int> layer_sizes;  // input ... output, at least 2 entries
    double leaky_slope = 0.2;
    OutputActivation output_activation = OutputActivation::None;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    void validate() const;  // throws std::invalid_argument
};

// in -> hidden x n_hidden -> out
MlpConfig mlp_config(int in, int hidden, int n_hidden, int out,
                     OutputActivation act = OutputActivation::None, double slope = 0.2);

struct LayerParams {
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
};

struct MlpParams {
    std::vector<LayerParams> layers;

    std::size_t count() const;
    bool operator==(const MlpParams&) const = default;
};

// Weights uniform on [-a, a] with a = sqrt(6 / (fan_in + fan_out)); biases 0.
MlpParams init_mlp(const MlpConfig& config, Rng& rng);

// Parameter handles on a tape, in the same order visit_params uses.
struct MlpVars {
    std::vector<std::vector<Var>> w;  // per layer, row-major
    std::vector<std::vector<Var>> b;
};

MlpVars lift_params(Tape& tape, const MlpParams& params);

// Fixed flattening order shared by lift_params, Adam state and gradients:
// layer 0 weights row-major, layer 0 biases, layer 1 weights, ...
void visit_params(MlpParams& params, const std::function<void(double&)>& fn);
std::vector<Var> flat_vars(const MlpVars& vars);
std::vector<double> flatten_params(const MlpParams& params);
void load_flat(MlpParams& params, std::span<const double> flat);

// Tape forward: affine + leaky_relu per hidden layer, affine + output
// activation on the last. Throws std::invalid_argument on dimension mismatch.
std::vector<Var> forward(const MlpVars& params, const MlpConfig& config,
                         std::span<const Var> input, Tape& tape);

// Same arithmetic, same accumulation order, no tape. Produces bit-identical
// values to the tape forward.
std::vector<double> forward(const MlpParams& params, const MlpConfig& config,
                            std::span<const double> input);

// Discriminator over concatenated (x, z). The raw pre-activation output is
// the logit; sigmoid of it is D(x, z).
struct JointDiscriminator {
    MlpConfig config;  // input dim = dim(x) + dim(z), output dim = 1
    MlpParams body;
};

Var disc_logit(const MlpVars& d, const MlpConfig& config, std::span<const Var> x,
               std::span<const Var> z, Tape& tape);
double disc_logit(const JointDiscriminator& d, std::span<const double> x,
                  std::span<const double> z);

struct Mlp {
    MlpConfig config;
    MlpParams params;
};

// Generator / encoder / joint discriminator triple.
struct Bigan {
    Mlp gen;
    Mlp enc;
    JointDiscriminator disc;
};

struct BiganVars {
    MlpVars gen, enc, disc;
};

BiganVars lift_bigan(Tape& tape, const Bigan& models);

// JSON (de)serialization: {"config": ..., "layers": [{"w": [[...]], "b": [...]}]}
// with w rows in row-major order, doubles at full precision.
std::string mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const std::string& text);
std::string bigan_to_json(const Bigan& models);
Bigan bigan_from_json(const std::string& text);

}  // namespace logan
