#include "logan/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace logan {

namespace fs = std::filesystem;
using nlohmann::json;

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::Vanilla: return "vanilla";
        case LossKind::Wasserstein: return "wasserstein";
        case LossKind::Lol1: return "lol1";
        case LossKind::Lol2: return "lol2";
        case LossKind::DirectModelMse: return "direct_model_mse";
    }
    return "vanilla";
}

const char* penalty_kind_name(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::None: return "none";
        case PenaltyKind::UniformGp: return "uniform";
        case PenaltyKind::PairwiseGp: return "pairwise";
    }
    return "none";
}

LossKind loss_kind_from(const std::string& name) {
    if (name == "vanilla") return LossKind::Vanilla;
    if (name == "wasserstein") return LossKind::Wasserstein;
    if (name == "lol1") return LossKind::Lol1;
    if (name == "lol2") return LossKind::Lol2;
    if (name == "direct_model_mse") return LossKind::DirectModelMse;
    throw ConfigError("unknown loss kind: " + name);
}

PenaltyKind penalty_kind_from(const std::string& name) {
    if (name == "none") return PenaltyKind::None;
    if (name == "uniform") return PenaltyKind::UniformGp;
    if (name == "pairwise") return PenaltyKind::PairwiseGp;
    throw ConfigError("unknown penalty kind: " + name);
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError("unknown key: " + path + "." + item.key());
    }
}

template <class T>
T get_as(const json& j, const char* key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    return get_as<T>(j, key, path);
}

ObjectiveSpec parse_objective(const json& j, const std::string& path) {
    check_keys(j, path,
               {"loss", "penalty", "lambda", "critic_updates", "mse_weight", "penalize_latent",
                "squared_pairwise", "saturating_vanilla"});
    LossKind loss = loss_kind_from(get_or<std::string>(j, "loss", path, "lol1"));
    PenaltyKind penalty = penalty_kind_from(get_or<std::string>(j, "penalty", path, "pairwise"));
    ObjectiveSpec spec = make_objective(loss, penalty);
    spec.lambda = get_or<double>(j, "lambda", path, spec.lambda);
    spec.critic_updates_per_gen = get_or<int>(j, "critic_updates", path,
                                              spec.critic_updates_per_gen);
    spec.mse_weight = get_or<double>(j, "mse_weight", path, spec.mse_weight);
    spec.penalize_latent = get_or<bool>(j, "penalize_latent", path, spec.penalize_latent);
    spec.squared_pairwise = get_or<bool>(j, "squared_pairwise", path, spec.squared_pairwise);
    spec.saturating_vanilla = get_or<bool>(j, "saturating_vanilla", path, spec.saturating_vanilla);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return spec;
}

ToyDistribution parse_data(const json& j, const std::string& path) {
    ToyDistribution dist;
    std::string kind = get_or<std::string>(j, "arrangement", path, "ring");
    if (kind == "ring") {
        check_keys(j, path, {"arrangement", "modes", "radius", "sigma"});
        RingArrangement ring;
        ring.k = get_or<int>(j, "modes", path, ring.k);
        ring.radius = get_or<double>(j, "radius", path, ring.radius);
        ring.sigma = get_or<double>(j, "sigma", path, ring.sigma);
        dist.arrangement = ring;
    } else if (kind == "grid") {
        check_keys(j, path, {"arrangement", "side", "spacing", "sigma"});
        GridArrangement grid;
        grid.side = get_or<int>(j, "side", path, grid.side);
        grid.spacing = get_or<double>(j, "spacing", path, grid.spacing);
        grid.sigma = get_or<double>(j, "sigma", path, grid.sigma);
        dist.arrangement = grid;
    } else {
        throw ConfigError(path + ".arrangement: expected \"ring\" or \"grid\", got " + kind);
    }
    try {
        dist.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return dist;
}

ExperimentConfig parse_experiment(const json& j, const std::string& path) {
    check_keys(j, path,
               {"seed", "steps", "batch_size", "eval_every", "snapshot_every", "collapse_init",
                "adam", "objective", "model", "data", "latent", "eval", "export_points",
                "out_dir"});
    ExperimentConfig cfg;
    cfg.train.steps = get_or<int>(j, "steps", path, cfg.train.steps);
    cfg.train.batch_size = get_or<int>(j, "batch_size", path, cfg.train.batch_size);
    cfg.train.eval_every = get_or<int>(j, "eval_every", path, cfg.train.eval_every);
    cfg.train.snapshot_every = get_or<int>(j, "snapshot_every", path, cfg.train.snapshot_every);
    cfg.train.collapse_init = get_or<bool>(j, "collapse_init", path, cfg.train.collapse_init);
    cfg.train.seed = get_or<std::uint64_t>(j, "seed", path, cfg.train.seed);

    if (j.contains("adam")) {
        const json& a = j.at("adam");
        const std::string p = path + ".adam";
        check_keys(a, p, {"alpha", "beta1", "beta2", "epsilon"});
        cfg.train.adam.alpha = get_or<double>(a, "alpha", p, cfg.train.adam.alpha);
        cfg.train.adam.beta1 = get_or<double>(a, "beta1", p, cfg.train.adam.beta1);
        cfg.train.adam.beta2 = get_or<double>(a, "beta2", p, cfg.train.adam.beta2);
        cfg.train.adam.epsilon = get_or<double>(a, "epsilon", p, cfg.train.adam.epsilon);
    }
    if (j.contains("objective")) {
        cfg.train.objective = parse_objective(j.at("objective"), path + ".objective");
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        const std::string p = path + ".model";
        check_keys(m, p, {"hidden_width", "hidden_layers", "leaky_slope"});
        cfg.train.model.hidden_width = get_or<int>(m, "hidden_width", p,
                                                   cfg.train.model.hidden_width);
        cfg.train.model.hidden_layers = get_or<int>(m, "hidden_layers", p,
                                                    cfg.train.model.hidden_layers);
        cfg.train.model.leaky_slope = get_or<double>(m, "leaky_slope", p,
                                                     cfg.train.model.leaky_slope);
    }
    if (j.contains("data")) cfg.data = parse_data(j.at("data"), path + ".data");
    if (j.contains("latent")) {
        const json& l = j.at("latent");
        const std::string p = path + ".latent";
        check_keys(l, p, {"dim"});
        cfg.latent.dim = get_or<int>(l, "dim", p, cfg.latent.dim);
        if (cfg.latent.dim < 1) throw ConfigError(p + ".dim: must be >= 1");
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        const std::string p = path + ".eval";
        check_keys(e, p, {"samples", "capture_radius", "min_fraction", "contour"});
        cfg.eval.samples = get_or<int>(e, "samples", p, cfg.eval.samples);
        cfg.eval.capture_radius = get_or<double>(e, "capture_radius", p, cfg.eval.capture_radius);
        cfg.eval.min_fraction = get_or<double>(e, "min_fraction", p, cfg.eval.min_fraction);
        if (e.contains("contour")) {
            const json& c = e.at("contour");
            const std::string pc = p + ".contour";
            check_keys(c, pc, {"x_min", "x_max", "y_min", "y_max", "nx", "ny"});
            cfg.contour.bounds.x_min = get_or<double>(c, "x_min", pc, cfg.contour.bounds.x_min);
            cfg.contour.bounds.x_max = get_or<double>(c, "x_max", pc, cfg.contour.bounds.x_max);
            cfg.contour.bounds.y_min = get_or<double>(c, "y_min", pc, cfg.contour.bounds.y_min);
            cfg.contour.bounds.y_max = get_or<double>(c, "y_max", pc, cfg.contour.bounds.y_max);
            cfg.contour.nx = get_or<int>(c, "nx", pc, cfg.contour.nx);
            cfg.contour.ny = get_or<int>(c, "ny", pc, cfg.contour.ny);
        }
        if (cfg.eval.samples < 1) throw ConfigError(p + ".samples: must be >= 1");
    }
    cfg.export_points = get_or<int>(j, "export_points", path, cfg.export_points);
    if (cfg.export_points < 0) throw ConfigError(path + ".export_points: must be >= 0");
    if (cfg.export_points > kPointCloudCap) cfg.export_points = kPointCloudCap;
    cfg.out_dir = get_or<std::string>(j, "out_dir", path, "");
    try {
        cfg.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return cfg;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json data_to_json(const ToyDistribution& dist) {
    if (const auto* ring = std::get_if<RingArrangement>(&dist.arrangement)) {
        return json{{"arrangement", "ring"},
                    {"modes", ring->k},
                    {"radius", ring->radius},
                    {"sigma", ring->sigma}};
    }
    const auto& grid = std::get<GridArrangement>(dist.arrangement);
    return json{{"arrangement", "grid"},
                {"side", grid.side},
                {"spacing", grid.spacing},
                {"sigma", grid.sigma}};
}

json experiment_to_json_obj(const ExperimentConfig& cfg) {
    const auto& t = cfg.train;
    return json{
        {"seed", t.seed},
        {"steps", t.steps},
        {"batch_size", t.batch_size},
        {"eval_every", t.eval_every},
        {"snapshot_every", t.snapshot_every},
        {"collapse_init", t.collapse_init},
        {"adam",
         {{"alpha", t.adam.alpha},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"epsilon", t.adam.epsilon}}},
        {"objective",
         {{"loss", loss_kind_name(t.objective.loss_kind)},
          {"penalty", penalty_kind_name(t.objective.penalty_kind)},
          {"lambda", t.objective.lambda},
          {"critic_updates", t.objective.critic_updates_per_gen},
          {"mse_weight", t.objective.mse_weight},
          {"penalize_latent", t.objective.penalize_latent},
          {"squared_pairwise", t.objective.squared_pairwise},
          {"saturating_vanilla", t.objective.saturating_vanilla}}},
        {"model",
         {{"hidden_width", t.model.hidden_width},
          {"hidden_layers", t.model.hidden_layers},
          {"leaky_slope", t.model.leaky_slope}}},
        {"data", data_to_json(cfg.data)},
        {"latent", {{"dim", cfg.latent.dim}}},
        {"eval",
         {{"samples", cfg.eval.samples},
          {"capture_radius", cfg.eval.capture_radius},
          {"min_fraction", cfg.eval.min_fraction},
          {"contour",
           {{"x_min", cfg.contour.bounds.x_min},
            {"x_max", cfg.contour.bounds.x_max},
            {"y_min", cfg.contour.bounds.y_min},
            {"y_max", cfg.contour.bounds.y_max},
            {"nx", cfg.contour.nx},
            {"ny", cfg.contour.ny}}}}},
        {"export_points", cfg.export_points},
        {"out_dir", cfg.out_dir}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_experiment(j, "$");
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment(parse_json_file(path), "$");
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    return experiment_to_json_obj(config).dump(2) + "\n";
}

SweepConfig load_sweep_config(const std::string& path) {
    json j = parse_json_file(path);
    check_keys(j, "$", {"base", "sweep"});
    SweepConfig cfg;
    if (!j.contains("base") || !j.contains("sweep")) {
        throw ConfigError("sweep config needs both \"base\" and \"sweep\"");
    }
    cfg.base = parse_experiment(j.at("base"), "$.base");
    const json& s = j.at("sweep");
    check_keys(s, "$.sweep", {"losses", "penalties", "seeds"});
    for (const auto& name : get_as<std::vector<std::string>>(s, "losses", "$.sweep")) {
        cfg.losses.push_back(loss_kind_from(name));
    }
    for (const auto& name : get_as<std::vector<std::string>>(s, "penalties", "$.sweep")) {
        cfg.penalties.push_back(penalty_kind_from(name));
    }
    cfg.seeds = get_as<std::vector<std::uint64_t>>(s, "seeds", "$.sweep");
    if (cfg.losses.empty() || cfg.penalties.empty() || cfg.seeds.empty()) {
        throw ConfigError("$.sweep: losses, penalties and seeds must be nonempty");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Run execution and artifact emission
// ---------------------------------------------------------------------------

namespace {

// Stream for report samples and point clouds, distinct from both the training
// stream and the per-step evaluation streams.
constexpr std::uint64_t kReportStream = 0xA5A5A5A55A5A5A5AULL;

void write_contour_files(const fs::path& dir, const ContourGrid& grid) {
    std::ostringstream csv;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (ix) csv << ',';
            csv << format_g17(grid.values[static_cast<std::size_t>(iy) * grid.nx + ix]);
        }
        csv << '\n';
    }
    write_text(dir / "contour.csv", csv.str());
    json meta{{"x_min", grid.bounds.x_min}, {"x_max", grid.bounds.x_max},
              {"y_min", grid.bounds.y_min}, {"y_max", grid.bounds.y_max},
              {"nx", grid.nx},             {"ny", grid.ny}};
    write_text(dir / "contour_meta.json", meta.dump(2) + "\n");
}

json report_to_json(const RunResult& result) {
    const auto& cov = result.coverage;
    const auto& art = result.artifacts;
    json j{{"modes_captured", cov.modes_captured},
           {"hq_fraction", cov.hq_fraction},
           {"per_mode_counts", cov.per_mode_counts},
           {"n_samples", cov.n_samples},
           {"capture_radius", cov.capture_radius},
           {"min_fraction", cov.min_fraction},
           {"x_l2", result.inversion.x_l2},
           {"z_l2", result.inversion.z_l2},
           {"aborted", art.aborted}};
    if (art.aborted) {
        j["abort_step"] = art.abort_step;
        j["abort_reason"] = art.abort_reason;
    }
    return j;
}

std::string csv_of_rows(const std::string& header, const Matrix& m, int limit) {
    std::ostringstream out;
    out << header << '\n';
    const std::size_t n = std::min<std::size_t>(m.rows, static_cast<std::size_t>(limit));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out << ',';
            out << format_g17(m.at(i, j));
        }
        out << '\n';
    }
    return out.str();
}

std::string tuple_header(const char* a, std::size_t na, const char* b, std::size_t nb) {
    std::ostringstream h;
    for (std::size_t i = 0; i < na; ++i) h << (i ? "," : "") << a << i;
    for (std::size_t i = 0; i < nb; ++i) h << ',' << b << i;
    return h.str();
}

}  // namespace

RunResult execute_run(const ExperimentConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("out_dir is required (config key or --out)");
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    write_text(dir / "config.json", experiment_config_to_json(config));

    RunResult result;
    result.artifacts = train(config.train, config.data, config.latent, config.eval);
    const RunArtifacts& art = result.artifacts;

    write_text(dir / "metrics.csv", metrics_to_csv(art.metrics));
    write_text(dir / "snapshot_initial.json", bigan_to_json(art.initial));
    write_text(dir / "snapshot_final.json", bigan_to_json(art.final_models));
    for (const auto& [step, models] : art.snapshots) {
        char name[48];
        std::snprintf(name, sizeof name, "snapshot_step%06d.json", step);
        write_text(dir / name, bigan_to_json(models));
    }

    const int last_step = art.aborted ? art.abort_step : config.train.steps;
    GeneratorEval gen_eval = evaluate_generator(art.final_models, config.train, config.data,
                                                config.latent, config.eval, last_step);
    result.coverage = gen_eval.coverage;

    Rng report_rng(config.train.seed ^ kReportStream);
    Matrix real = sample_data(config.data, config.eval.samples, report_rng);
    Matrix latents = sample_latent(config.latent, config.eval.samples, report_rng);
    result.inversion = inversion_error(art.final_models.gen, art.final_models.enc, real, latents);

    write_text(dir / "report.json", report_to_json(result).dump(2) + "\n");

    if (art.aborted) {
        json err{{"step", art.abort_step}, {"reason", art.abort_reason}};
        write_text(dir / "error.json", err.dump(2) + "\n");
    }

    // Point clouds: real data, generations, reconstructions, and the joint
    // tuples (x, E(x)) / (G(z), z) for the 3-D visualizations.
    const int n = config.export_points;
    if (n > 0) {
        const auto& models = art.final_models;
        const std::size_t nr = std::min<std::size_t>(real.rows, static_cast<std::size_t>(n));
        const std::size_t dz = static_cast<std::size_t>(config.latent.dim);

        Matrix recon(nr, 2);
        Matrix tuples_real(nr, 2 + dz);
        for (std::size_t i = 0; i < nr; ++i) {
            auto e = forward(models.enc.params, models.enc.config, real.row(i));
            auto xhat = forward(models.gen.params, models.gen.config, e);
            recon.at(i, 0) = xhat[0];
            recon.at(i, 1) = xhat[1];
            tuples_real.at(i, 0) = real.at(i, 0);
            tuples_real.at(i, 1) = real.at(i, 1);
            for (std::size_t d = 0; d < dz; ++d) tuples_real.at(i, 2 + d) = e[d];
        }
        const std::size_t ng = std::min<std::size_t>(gen_eval.z.rows, static_cast<std::size_t>(n));
        Matrix tuples_fake(ng, 2 + dz);
        for (std::size_t i = 0; i < ng; ++i) {
            tuples_fake.at(i, 0) = gen_eval.samples.at(i, 0);
            tuples_fake.at(i, 1) = gen_eval.samples.at(i, 1);
            for (std::size_t d = 0; d < dz; ++d) tuples_fake.at(i, 2 + d) = gen_eval.z.at(i, d);
        }

        write_text(dir / "points_real.csv", csv_of_rows("x0,x1", real, n));
        write_text(dir / "points_generated.csv", csv_of_rows("x0,x1", gen_eval.samples, n));
        write_text(dir / "points_reconstructed.csv", csv_of_rows("x0,x1", recon, n));
        write_text(dir / "tuples_real.csv",
                   csv_of_rows(tuple_header("x", 2, "z", dz), tuples_real, n));
        write_text(dir / "tuples_fake.csv",
                   csv_of_rows(tuple_header("x", 2, "z", dz), tuples_fake, n));
    }

    ContourGrid grid = contour_grid(art.final_models.disc, art.final_models.enc,
                                    config.contour.bounds, config.contour.nx, config.contour.ny);
    write_contour_files(dir, grid);

    return result;
}

std::string sweep_summary_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "loss,penalty,seed,modes_captured,hq_fraction,x_l2,aborted\n";
    for (const auto& r : rows) {
        out << loss_kind_name(r.loss) << ',' << penalty_kind_name(r.penalty) << ',' << r.seed
            << ',' << r.modes_captured << ',' << format_g17(r.hq_fraction) << ','
            << format_g17(r.x_l2) << ',' << (r.aborted ? 1 : 0) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// CLI verbs
// ---------------------------------------------------------------------------

namespace {

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides) {
    if (overrides.seed) cfg.train.seed = *overrides.seed;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
}

int report_error(const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
}

}  // namespace

int cmd_train(const std::string& config_path, const CliOverrides& overrides) {
    try {
        ExperimentConfig cfg = load_experiment_config(config_path);
        apply_overrides(cfg, overrides);
        RunResult result = execute_run(cfg);
        std::cout << "run " << cfg.out_dir << ": modes_captured=" << result.coverage.modes_captured
                  << " hq_fraction=" << result.coverage.hq_fraction
                  << " x_l2=" << result.inversion.x_l2
                  << (result.artifacts.aborted ? " (aborted)" : "") << '\n';
        return result.artifacts.aborted ? 1 : 0;
    } catch (const ConfigError& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int cmd_sweep(const std::string& config_path, const CliOverrides& overrides) {
    try {
        SweepConfig sweep = load_sweep_config(config_path);
        apply_overrides(sweep.base, overrides);
        if (sweep.base.out_dir.empty()) {
            throw ConfigError("out_dir is required (config key or --out)");
        }

        struct Cell {
            ExperimentConfig config;
            SweepRow row;
            std::string error;
        };
        std::vector<Cell> cells;
        for (LossKind loss : sweep.losses) {
            for (PenaltyKind penalty : sweep.penalties) {
                for (std::uint64_t seed : sweep.seeds) {
                    Cell cell;
                    cell.config = sweep.base;
                    ObjectiveSpec spec = make_objective(loss, penalty);
                    spec.lambda = sweep.base.train.objective.lambda;
                    spec.mse_weight = sweep.base.train.objective.mse_weight;
                    spec.penalize_latent = sweep.base.train.objective.penalize_latent;
                    spec.squared_pairwise = sweep.base.train.objective.squared_pairwise;
                    spec.saturating_vanilla = sweep.base.train.objective.saturating_vanilla;
                    cell.config.train.objective = spec;
                    cell.config.train.seed = seed;
                    std::ostringstream name;
                    name << loss_kind_name(loss) << '_' << penalty_kind_name(penalty) << "_seed"
                         << seed;
                    cell.config.out_dir =
                        (fs::path(sweep.base.out_dir) / name.str()).string();
                    cell.row.loss = loss;
                    cell.row.penalty = penalty;
                    cell.row.seed = seed;
                    cells.push_back(std::move(cell));
                }
            }
        }

        unsigned jobs = overrides.jobs > 0 ? static_cast<unsigned>(overrides.jobs)
                                           : std::max(1u, std::thread::hardware_concurrency());
        jobs = std::min<unsigned>(jobs, cells.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                Cell& cell = cells[i];
                try {
                    RunResult result = execute_run(cell.config);
                    cell.row.modes_captured = result.coverage.modes_captured;
                    cell.row.hq_fraction = result.coverage.hq_fraction;
                    cell.row.x_l2 = result.inversion.x_l2;
                    cell.row.aborted = result.artifacts.aborted;
                } catch (const std::exception& e) {
                    cell.error = e.what();
                    cell.row.aborted = true;
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        std::vector<SweepRow> rows;
        bool any_failed = false;
        for (const Cell& cell : cells) {
            rows.push_back(cell.row);
            if (cell.row.aborted) any_failed = true;
            if (!cell.error.empty()) {
                std::cerr << "run " << cell.config.out_dir << " failed: " << cell.error << '\n';
            }
        }
        const std::string summary = sweep_summary_csv(rows);
        fs::create_directories(sweep.base.out_dir);
        write_text(fs::path(sweep.base.out_dir) / "summary.csv", summary);
        std::cout << summary;
        return any_failed ? 1 : 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int cmd_escape(int n_dims, double lambda, const std::vector<double>& depths,
               const std::string& out_path) {
    try {
        const double crit = d_crit(n_dims, lambda);
        std::ostringstream out;
        out << "valley_depth,d_crit,above_dcrit,method,crossed,final_gap\n";
        for (double depth : depths) {
            for (EscapeMethod method : {EscapeMethod::MsePull, EscapeMethod::PairwiseGpField}) {
                EscapeLandscape landscape;
                landscape.valley_depth = depth;
                landscape.n_dims = n_dims;
                landscape.lambda_mse = lambda;
                EscapeResult r = escape_experiment(landscape, method);
                out << format_g17(depth) << ',' << format_g17(crit) << ','
                    << (depth > crit ? 1 : 0) << ','
                    << (method == EscapeMethod::MsePull ? "mse" : "pairwise_gp") << ','
                    << (r.crossed ? 1 : 0) << ',' << format_g17(r.final_gap) << '\n';
            }
        }
        std::cout << out.str();
        if (!out_path.empty()) write_text(out_path, out.str());
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int cmd_eval(const std::string& config_path, const std::string& snapshot_path,
             const std::string& out_path) {
    try {
        ExperimentConfig cfg = load_experiment_config(config_path);
        std::ifstream in(snapshot_path);
        if (!in) throw ConfigError("cannot open snapshot: " + snapshot_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        Bigan models = bigan_from_json(buffer.str());

        GeneratorEval gen_eval = evaluate_generator(models, cfg.train, cfg.data, cfg.latent,
                                                    cfg.eval, cfg.train.steps);
        Rng report_rng(cfg.train.seed ^ kReportStream);
        Matrix real = sample_data(cfg.data, cfg.eval.samples, report_rng);
        Matrix latents = sample_latent(cfg.latent, cfg.eval.samples, report_rng);
        InversionError inv = inversion_error(models.gen, models.enc, real, latents);

        RunResult result;
        result.coverage = gen_eval.coverage;
        result.inversion = inv;
        const std::string text = report_to_json(result).dump(2) + "\n";
        std::cout << text;
        if (!out_path.empty()) write_text(out_path, text);
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int cmd_contour(const std::string& config_path, const std::string& snapshot_path,
                const std::string& out_dir) {
    try {
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (cfg.out_dir.empty()) throw ConfigError("out_dir is required (config key or --out)");
        std::ifstream in(snapshot_path);
        if (!in) throw ConfigError("cannot open snapshot: " + snapshot_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        Bigan models = bigan_from_json(buffer.str());

        fs::create_directories(cfg.out_dir);
        ContourGrid grid = contour_grid(models.disc, models.enc, cfg.contour.bounds,
                                        cfg.contour.nx, cfg.contour.ny);
        write_contour_files(cfg.out_dir, grid);
        std::cout << "contour written to " << cfg.out_dir << '\n';
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

}  // namespace logan
