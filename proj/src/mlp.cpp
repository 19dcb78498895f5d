#include "logan/mlp.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "json.hpp"

namespace logan {

void MlpConfig::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("MlpConfig: need at least an input and an output layer");
    }
    for (int s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("MlpConfig: layer sizes must be >= 1");
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        throw std::invalid_argument("MlpConfig: leaky_slope must be in (0, 1)");
    }
}

MlpConfig mlp_config(int in, int hidden, int n_hidden, int out, OutputActivation act,
                     double slope) {
    MlpConfig c;
    c.layer_sizes.push_back(in);
    for (int i = 0; i < n_hidden; ++i) c.layer_sizes.push_back(hidden);
    c.layer_sizes.push_back(out);
    c.leaky_slope = slope;
    c.output_activation = act;
    c.validate();
    return c;
}

std::size_t MlpParams::count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

MlpParams init_mlp(const MlpConfig& config, Rng& rng) {
    config.validate();
    MlpParams p;
    const auto& sizes = config.layer_sizes;
    p.layers.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        auto& layer = p.layers[l];
        layer.w.resize(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& w : layer.w) w = rng.uniform(-a, a);
        layer.b.assign(fan_out, 0.0);
    }
    return p;
}

MlpVars lift_params(Tape& tape, const MlpParams& params) {
    MlpVars v;
    v.w.resize(params.layers.size());
    v.b.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        v.w[l].reserve(params.layers[l].w.size());
        for (double w : params.layers[l].w) v.w[l].push_back(tape.lift(w));
        v.b[l].reserve(params.layers[l].b.size());
        for (double b : params.layers[l].b) v.b[l].push_back(tape.lift(b));
    }
    return v;
}

void visit_params(MlpParams& params, const std::function<void(double&)>& fn) {
    for (auto& layer : params.layers) {
        for (double& w : layer.w) fn(w);
        for (double& b : layer.b) fn(b);
    }
}

std::vector<Var> flat_vars(const MlpVars& vars) {
    std::vector<Var> out;
    for (std::size_t l = 0; l < vars.w.size(); ++l) {
        out.insert(out.end(), vars.w[l].begin(), vars.w[l].end());
        out.insert(out.end(), vars.b[l].begin(), vars.b[l].end());
    }
    return out;
}

std::vector<double> flatten_params(const MlpParams& params) {
    std::vector<double> out;
    out.reserve(params.count());
    for (const auto& layer : params.layers) {
        out.insert(out.end(), layer.w.begin(), layer.w.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    return out;
}

void load_flat(MlpParams& params, std::span<const double> flat) {
    std::size_t i = 0;
    visit_params(params, [&](double& p) { p = flat[i++]; });
    if (i != flat.size()) throw std::invalid_argument("load_flat: size mismatch");
}

namespace {

Var apply_output_activation(Tape& tape, Var v, OutputActivation act) {
    switch (act) {
        case OutputActivation::None: return v;
        case OutputActivation::Sigmoid: return tape.sigmoid(v);
        case OutputActivation::Tanh: return tape.tanh(v);
    }
    return v;
}

double apply_output_activation(double v, OutputActivation act) {
    switch (act) {
        case OutputActivation::None: return v;
        case OutputActivation::Sigmoid: return Tape::sigmoid_value(v);
        case OutputActivation::Tanh: return std::tanh(v);
    }
    return v;
}

}  // namespace

std::vector<Var> forward(const MlpVars& params, const MlpConfig& config,
                         std::span<const Var> input, Tape& tape) {
    const auto& sizes = config.layer_sizes;
    if (static_cast<int>(input.size()) != sizes.front()) {
        throw std::invalid_argument("forward: input size does not match the first layer");
    }
    std::vector<Var> h(input.begin(), input.end());
    std::vector<Var> next;
    const std::size_t n_layers = sizes.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const std::vector<Var>& w = params.w[l];
        const std::vector<Var>& b = params.b[l];
        next.clear();
        next.reserve(out);
        for (int o = 0; o < out; ++o) {
            Var acc = b[o];
            const Var* wr = w.data() + static_cast<std::size_t>(o) * in;
            for (int j = 0; j < in; ++j) acc = tape.fma(wr[j], h[j], acc);
            if (l + 1 < n_layers) {
                acc = tape.leaky_relu(acc, config.leaky_slope);
            } else {
                acc = apply_output_activation(tape, acc, config.output_activation);
            }
            next.push_back(acc);
        }
        h.swap(next);
    }
    return h;
}

std::vector<double> forward(const MlpParams& params, const MlpConfig& config,
                            std::span<const double> input) {
    const auto& sizes = config.layer_sizes;
    if (static_cast<int>(input.size()) != sizes.front()) {
        throw std::invalid_argument("forward: input size does not match the first layer");
    }
    std::vector<double> h(input.begin(), input.end());
    std::vector<double> next;
    const std::size_t n_layers = sizes.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const auto& layer = params.layers[l];
        next.clear();
        next.reserve(out);
        for (int o = 0; o < out; ++o) {
            double acc = layer.b[o];
            const double* wr = layer.w.data() + static_cast<std::size_t>(o) * in;
            // Same accumulation order as the tape forward: bit-identical values.
            for (int j = 0; j < in; ++j) acc = wr[j] * h[j] + acc;
            if (l + 1 < n_layers) {
                acc = acc >= 0.0 ? acc : config.leaky_slope * acc;
            } else {
                acc = apply_output_activation(acc, config.output_activation);
            }
            next.push_back(acc);
        }
        h.swap(next);
    }
    return h;
}

Var disc_logit(const MlpVars& d, const MlpConfig& config, std::span<const Var> x,
               std::span<const Var> z, Tape& tape) {
    if (static_cast<int>(x.size() + z.size()) != config.input_dim() || config.output_dim() != 1) {
        throw std::invalid_argument("disc_logit: dimension mismatch");
    }
    std::vector<Var> joint;
    joint.reserve(x.size() + z.size());
    joint.insert(joint.end(), x.begin(), x.end());
    joint.insert(joint.end(), z.begin(), z.end());
    return forward(d, config, joint, tape)[0];
}

double disc_logit(const JointDiscriminator& d, std::span<const double> x,
                  std::span<const double> z) {
    if (static_cast<int>(x.size() + z.size()) != d.config.input_dim() ||
        d.config.output_dim() != 1) {
        throw std::invalid_argument("disc_logit: dimension mismatch");
    }
    std::vector<double> joint;
    joint.reserve(x.size() + z.size());
    joint.insert(joint.end(), x.begin(), x.end());
    joint.insert(joint.end(), z.begin(), z.end());
    return forward(d.body, d.config, joint)[0];
}

BiganVars lift_bigan(Tape& tape, const Bigan& models) {
    return BiganVars{lift_params(tape, models.gen.params), lift_params(tape, models.enc.params),
                     lift_params(tape, models.disc.body)};
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

const char* activation_name(OutputActivation a) {
    switch (a) {
        case OutputActivation::None: return "none";
        case OutputActivation::Sigmoid: return "sigmoid";
        case OutputActivation::Tanh: return "tanh";
    }
    return "none";
}

OutputActivation activation_from(const std::string& s) {
    if (s == "none") return OutputActivation::None;
    if (s == "sigmoid") return OutputActivation::Sigmoid;
    if (s == "tanh") return OutputActivation::Tanh;
    throw std::invalid_argument("unknown output_activation: " + s);
}

json config_to_json(const MlpConfig& c) {
    return json{{"layer_sizes", c.layer_sizes},
                {"leaky_slope", c.leaky_slope},
                {"output_activation", activation_name(c.output_activation)}};
}

MlpConfig config_from_json(const json& j) {
    MlpConfig c;
    c.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.output_activation = activation_from(j.at("output_activation").get<std::string>());
    c.validate();
    return c;
}

json mlp_to_json_obj(const Mlp& mlp) {
    json layers = json::array();
    const auto& sizes = mlp.config.layer_sizes;
    for (std::size_t l = 0; l < mlp.params.layers.size(); ++l) {
        const auto& layer = mlp.params.layers[l];
        const int in = sizes[l];
        const int out = sizes[l + 1];
        json w = json::array();
        for (int o = 0; o < out; ++o) {
            w.push_back(std::vector<double>(layer.w.begin() + static_cast<std::size_t>(o) * in,
                                            layer.w.begin() + static_cast<std::size_t>(o + 1) * in));
        }
        layers.push_back(json{{"w", std::move(w)}, {"b", layer.b}});
    }
    return json{{"config", config_to_json(mlp.config)}, {"layers", std::move(layers)}};
}

Mlp mlp_from_json_obj(const json& j) {
    Mlp mlp;
    mlp.config = config_from_json(j.at("config"));
    const auto& layers = j.at("layers");
    if (layers.size() != mlp.config.layer_sizes.size() - 1) {
        throw std::invalid_argument("mlp json: layer count does not match config");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const int in = mlp.config.layer_sizes[l];
        const int out = mlp.config.layer_sizes[l + 1];
        LayerParams lp;
        const auto& rows = layers[l].at("w");
        if (static_cast<int>(rows.size()) != out) {
            throw std::invalid_argument("mlp json: weight row count mismatch");
        }
        lp.w.reserve(static_cast<std::size_t>(in) * out);
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != in) {
                throw std::invalid_argument("mlp json: weight column count mismatch");
            }
            for (const auto& x : row) lp.w.push_back(x.get<double>());
        }
        lp.b = layers[l].at("b").get<std::vector<double>>();
        if (static_cast<int>(lp.b.size()) != out) {
            throw std::invalid_argument("mlp json: bias count mismatch");
        }
        mlp.params.layers.push_back(std::move(lp));
    }
    return mlp;
}

}  // namespace

std::string mlp_to_json(const Mlp& mlp) { return mlp_to_json_obj(mlp).dump(); }

Mlp mlp_from_json(const std::string& text) { return mlp_from_json_obj(json::parse(text)); }

std::string bigan_to_json(const Bigan& models) {
    json j{{"generator", mlp_to_json_obj(models.gen)},
           {"encoder", mlp_to_json_obj(models.enc)},
           {"discriminator", mlp_to_json_obj(Mlp{models.disc.config, models.disc.body})}};
    return j.dump();
}

Bigan bigan_from_json(const std::string& text) {
    json j = json::parse(text);
    Bigan b;
    b.gen = mlp_from_json_obj(j.at("generator"));
    b.enc = mlp_from_json_obj(j.at("encoder"));
    Mlp d = mlp_from_json_obj(j.at("discriminator"));
    b.disc = JointDiscriminator{std::move(d.config), std::move(d.params)};
    return b;
}

}  // namespace logan
