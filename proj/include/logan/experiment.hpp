// Experiment configs and the CLI verbs built on them. One flat JSON file per
// experiment; unknown keys are rejected with their path, and every run
// directory stores the resolved config verbatim.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "logan/evaluation.hpp"
#include "logan/toydata.hpp"
#include "logan/trainer.hpp"

namespace logan {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContourSettings {
    Bounds bounds;
    int nx = 100;
    int ny = 100;
};

inline constexpr int kPointCloudCap = 50000;  // rows per exported point-cloud file

struct ExperimentConfig {
    TrainConfig train;
    ToyDistribution data;
    LatentSpec latent;
    EvalSettings eval;
    ContourSettings contour;
    int export_points = 10000;
    std::string out_dir;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);  // resolved echo

struct SweepConfig {
    ExperimentConfig base;
    std::vector<LossKind> losses;
    std::vector<PenaltyKind> penalties;
    std::vector<std::uint64_t> seeds;
};

SweepConfig load_sweep_config(const std::string& path);

const char* loss_kind_name(LossKind kind);
const char* penalty_kind_name(PenaltyKind kind);
LossKind loss_kind_from(const std::string& name);
PenaltyKind penalty_kind_from(const std::string& name);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int jobs = 0;  // <= 0: hardware concurrency
};

// Shared by cmd_train and the sweep workers: trains, writes the run directory
// (config.json, metrics.csv, snapshots, report.json, contour, point clouds).
struct RunResult {
    RunArtifacts artifacts;
    ModeCoverageReport coverage;
    InversionError inversion;
};

RunResult execute_run(const ExperimentConfig& config);

struct SweepRow {
    LossKind loss;
    PenaltyKind penalty;
    std::uint64_t seed = 0;
    int modes_captured = 0;
    double hq_fraction = 0.0;
    double x_l2 = 0.0;
    bool aborted = false;
};

std::string sweep_summary_csv(const std::vector<SweepRow>& rows);

// CLI verbs; each returns a process exit code (0 ok, 1 aborted run, 2 config
// or I/O error reported on stderr).
int cmd_train(const std::string& config_path, const CliOverrides& overrides);
int cmd_sweep(const std::string& config_path, const CliOverrides& overrides);
int cmd_escape(int n_dims, double lambda, const std::vector<double>& depths,
               const std::string& out_path);
int cmd_eval(const std::string& config_path, const std::string& snapshot_path,
             const std::string& out_path);
int cmd_contour(const std::string& config_path, const std::string& snapshot_path,
                const std::string& out_dir);

}  // namespace logan
