// Experiment runner: train | sweep | escape | eval | contour.
#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "logan/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Adversarial mode-coverage experiments on 2-D toy mixtures"};
    app.require_subcommand(1);

    logan::CliOverrides overrides;
    std::string config_path, snapshot_path, out_path;
    std::uint64_t seed_flag = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config) {
            cmd->add_option("--config", config_path, "experiment config JSON")->required();
        }
        cmd->add_option("--out", out_path, "output directory override");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { overrides.seed = s; }, "seed override");
    };

    CLI::App* train = app.add_subcommand("train", "run one training experiment");
    add_common(train, true);

    CLI::App* sweep = app.add_subcommand("sweep", "run a loss/penalty/seed cross product");
    add_common(sweep, true);
    sweep->add_option("--jobs", overrides.jobs, "parallel runs (default: hardware concurrency)");

    CLI::App* escape = app.add_subcommand("escape", "bounded-gradient valley escape table");
    int n_dims = 2;
    double lambda = 0.1;
    std::vector<double> depths;
    escape->add_option("--dims", n_dims, "data dimensionality N");
    escape->add_option("--lambda", lambda, "reconstruction loss weight");
    escape->add_option("--depths", depths, "valley depths to test")->required();
    escape->add_option("--out", out_path, "CSV output path");

    CLI::App* eval = app.add_subcommand("eval", "re-score a saved snapshot");
    add_common(eval, true);
    eval->add_option("--snapshot", snapshot_path, "model snapshot JSON")->required();

    CLI::App* contour = app.add_subcommand("contour", "discriminator grid from a snapshot");
    add_common(contour, true);
    contour->add_option("--snapshot", snapshot_path, "model snapshot JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (!out_path.empty()) overrides.out_dir = out_path;
    if (train->parsed()) return logan::cmd_train(config_path, overrides);
    if (sweep->parsed()) return logan::cmd_sweep(config_path, overrides);
    if (escape->parsed()) return logan::cmd_escape(n_dims, lambda, depths, out_path);
    if (eval->parsed()) return logan::cmd_eval(config_path, snapshot_path, out_path);
    if (contour->parsed()) return logan::cmd_contour(config_path, snapshot_path, out_path);
    return 2;
}
