// Command-line front end: inject, denoise, evaluate, sweep.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "spdenoise/cli.hpp"

namespace {

// Config precedence: flags > config file > auto-config > defaults.
spd::DenoiseConfig resolve_config(const CLI::App& cmd, const std::string& config_file,
                                  bool auto_config, const std::string& input) {
    spd::DenoiseConfig config;

    nlohmann::json file;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw spd::io_error("cannot open config file '" + config_file + "'");
        in >> file;
    }

    auto flag_set = [&](const std::string& name) { return cmd.count(name) > 0; };
    auto pick_int = [&](const std::string& flag, const char* key, int fallback) {
        if (flag_set(flag)) return cmd.get_option(flag)->as<int>();
        if (file.contains(key)) return file[key].get<int>();
        return fallback;
    };
    auto pick_double = [&](const std::string& flag, const char* key, double fallback) {
        if (flag_set(flag)) return cmd.get_option(flag)->as<double>();
        if (file.contains(key)) return file[key].get<double>();
        return fallback;
    };

    config.t_p = pick_int("--tp", "t_p", config.t_p);
    config.t_s = pick_int("--ts", "t_s", config.t_s);

    if (auto_config) {
        const spd::GrayImage img = spd::load_pgm(input);
        const spd::NoiseMask mask = spd::detect(img, config.t_p, config.t_s);
        const double density =
            static_cast<double>(mask.count()) / static_cast<double>(img.size());
        const spd::DenoiseConfig auto_cfg = spd::default_config_for_density(density);
        config.patch_size = auto_cfg.patch_size;
        config.cluster_count = auto_cfg.cluster_count;
    }

    config.patch_size = pick_int("--patch-size", "patch_size", config.patch_size);
    config.cluster_count = pick_int("--clusters", "cluster_count", config.cluster_count);
    config.beta = pick_double("--beta", "beta", config.beta);
    config.filter.sigma_n = pick_double("--sigma-n", "sigma_n", config.filter.sigma_n);
    config.filter.n_min = pick_int("--n-min", "n_min", config.filter.n_min);
    config.filter.n_max = pick_int("--n-max", "n_max", config.filter.n_max);
    config.em.max_iters = pick_int("--max-iters", "max_iters", config.em.max_iters);
    config.em.rel_tol = pick_double("--rel-tol", "rel_tol", config.em.rel_tol);
    config.em.ridge = pick_double("--ridge", "ridge", config.em.ridge);
    config.em.min_cluster_size =
        pick_int("--min-cluster-size", "min_cluster_size", config.em.min_cluster_size);
    config.em.seed = static_cast<std::uint32_t>(pick_int("--seed", "seed", 0));
    if (file.contains("diagonal_covariance"))
        config.em.diagonal_covariance = file["diagonal_covariance"].get<bool>();
    if (cmd.count("--diagonal-covariance")) config.em.diagonal_covariance = true;
    return config;
}

void add_config_flags(CLI::App* cmd) {
    cmd->add_option("--patch-size,-L", "patch side length L");
    cmd->add_option("--clusters,-K", "mixture cluster count K");
    cmd->add_option("--beta", "Dirichlet concentration");
    cmd->add_option("--sigma-n", "similarity bandwidth (must be > 1)");
    cmd->add_option("--n-min", "minimum reference patches");
    cmd->add_option("--n-max", "reference patch cap");
    cmd->add_option("--tp", "pepper threshold");
    cmd->add_option("--ts", "salt threshold");
    cmd->add_option("--max-iters", "EM iteration cap");
    cmd->add_option("--rel-tol", "EM relative stopping tolerance");
    cmd->add_option("--ridge", "covariance regularizer scale");
    cmd->add_option("--min-cluster-size", "pruning threshold (0 = auto)");
    cmd->add_option("--seed", "EM initialization seed");
    cmd->add_flag("--diagonal-covariance", "restrict covariances to diagonals (faster)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"salt-and-pepper denoiser: patch clustering + non-local switching filter"};
    app.require_subcommand(1);

    // inject
    std::string in_path, out_path, mask_csv, mask_pgm;
    double density = 0.1, salt_fraction = 0.5;
    std::uint32_t seed = 0;
    auto* inject = app.add_subcommand("inject", "add salt-and-pepper noise to a PGM");
    inject->add_option("input", in_path)->required();
    inject->add_option("output", out_path)->required();
    inject->add_option("--density", density, "corruption probability per pixel");
    inject->add_option("--salt-fraction", salt_fraction, "share of corrupted pixels set to 255");
    inject->add_option("--seed", seed);
    inject->add_option("--mask-csv", mask_csv, "sidecar CSV path (default <output>.mask.csv)");
    inject->add_option("--mask-pgm", mask_pgm, "also write the mask as a PGM");

    // denoise
    std::string config_file, stats_json, save_model, load_model;
    bool auto_config = false;
    auto* denoise = app.add_subcommand("denoise", "restore a corrupted PGM");
    denoise->add_option("input", in_path)->required();
    denoise->add_option("output", out_path)->required();
    denoise->add_option("--config", config_file, "JSON config file");
    denoise->add_flag("--auto-config", auto_config, "pick (L,K) from the detected noise density");
    denoise->add_option("--stats-json", stats_json, "write run statistics as JSON");
    denoise->add_option("--save-model", save_model, "save the fitted mixture model");
    denoise->add_option("--load-model", load_model, "reuse a previously fitted model");
    add_config_flags(denoise);

    // evaluate
    std::string ref_path, test_path;
    auto* evaluate = app.add_subcommand("evaluate", "print psnr_db,ssim,mse for a pair of PGMs");
    evaluate->add_option("reference", ref_path)->required();
    evaluate->add_option("test", test_path)->required();

    // sweep
    std::string csv_path;
    spd::SweepSpec spec;
    auto* sweep = app.add_subcommand("sweep", "parameter sweep emitting CSV");
    sweep->add_option("input", in_path)->required();
    sweep->add_option("output", csv_path)->required();
    sweep->add_option("--densities", spec.densities, "noise densities")->required();
    sweep->add_option("--patch-sizes", spec.patch_sizes, "patch sizes L")->required();
    sweep->add_option("--clusters", spec.cluster_counts, "cluster counts K")->required();
    sweep->add_option("--trials", spec.trials_per_cell, "trials per cell");
    sweep->add_option("--seed-base", spec.seed_base);
    sweep->add_option("--salt-fraction", spec.salt_fraction);
    sweep->add_option("--config", config_file, "JSON config file for shared settings");

    CLI11_PARSE(app, argc, argv);

    try {
        if (inject->parsed())
            return spd::cmd_inject(in_path, out_path, density, salt_fraction, seed, mask_csv,
                                   mask_pgm);
        if (denoise->parsed()) {
            spd::DenoiseCliOptions opts;
            opts.stats_json = stats_json;
            opts.save_model = save_model;
            opts.load_model = load_model;
            const spd::DenoiseConfig config =
                resolve_config(*denoise, config_file, auto_config, in_path);
            return spd::cmd_denoise(in_path, out_path, config, opts);
        }
        if (evaluate->parsed()) return spd::cmd_evaluate(ref_path, test_path);
        if (sweep->parsed()) {
            spd::DenoiseConfig base;
            if (!config_file.empty()) {
                // reuse the same key set as denoise --config
                CLI::App dummy;
                add_config_flags(&dummy);
                base = resolve_config(dummy, config_file, false, in_path);
            }
            return spd::cmd_sweep(in_path, spec, csv_path, base);
        }
    } catch (const spd::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
