#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spdenoise/baselines.hpp"
#include "spdenoise/image.hpp"
#include "spdenoise/metrics.hpp"
#include "spdenoise/noise.hpp"
#include "spdenoise/pipeline.hpp"

namespace spd {

struct SweepSpec {
    std::vector<double> densities;
    std::vector<int> patch_sizes;
    std::vector<int> cluster_counts;
    int trials_per_cell = 1;
    std::uint32_t seed_base = 0;
    double salt_fraction = 0.5;

    void validate() const {
        if (densities.empty() || patch_sizes.empty() || cluster_counts.empty())
            throw config_error("sweep lists must be non-empty");
        if (trials_per_cell < 1) throw config_error("trials_per_cell must be >= 1");
        for (double d : densities)
            if (d < 0.0 || d > 1.0) throw config_error("sweep density out of [0,1]");
    }
};

namespace detail {

inline std::string format_psnr(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string format_mse(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// Maps exceptions to exit codes: I/O and parse problems -> 2, bad
// configuration -> 1, anything else -> 1.
template <typename Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const io_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace detail

/// `inject`: writes the corrupted PGM plus a ground-truth mask sidecar CSV.
inline int cmd_inject(const std::string& input, const std::string& output, double density,
                      double salt_fraction, std::uint32_t seed,
                      const std::string& mask_csv = "", const std::string& mask_pgm = "",
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::run_guarded(err, [&] {
        const GrayImage img = load_pgm(input);
        NoiseParams params;
        params.density = density;
        params.salt_fraction = salt_fraction;
        params.seed = seed;
        auto [noisy, mask] = inject(img, params);
        save_pgm(output, noisy);
        const std::string csv_path = mask_csv.empty() ? output + ".mask.csv" : mask_csv;
        std::ofstream csv(csv_path);
        if (!csv) throw io_error("cannot open '" + csv_path + "' for writing");
        write_mask_csv(csv, mask);
        if (!mask_pgm.empty()) save_pgm(mask_pgm, mask_to_image(mask));
        out << "realized_density="
            << static_cast<double>(mask.count()) / static_cast<double>(img.size()) << "\n";
    });
}

struct DenoiseCliOptions {
    std::string stats_json;
    std::string save_model;
    std::string load_model;
};

/// `denoise`: runs the pipeline, prints RunStats as key=value lines.
inline int cmd_denoise(const std::string& input, const std::string& output,
                       const DenoiseConfig& config, const DenoiseCliOptions& opts = {},
                       std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::run_guarded(err, [&] {
        const GrayImage img = load_pgm(input);
        GrayImage result;
        RunStats stats;
        if (!opts.load_model.empty()) {
            const GmmModel model = load_model_file(opts.load_model);
            std::tie(result, stats) = denoise_with_model(img, config, model);
        } else if (!opts.save_model.empty()) {
            // run the stages separately so the post-prune model can be kept
            config.validate();
            const NoiseMask mask = detect(img, config.t_p, config.t_s);
            if (mask.count() == 0) throw config_error("--save-model needs a noisy input image");
            const PatchSet patches = extract(img, mask, config.patch_size);
            const int k = std::min<int>(config.cluster_count, patches.count());
            FitTrace trace;
            auto [model, assignment] = fit(patches.vectors, k, config.em, config.beta, &trace);
            const int min_size = config.em.min_cluster_size > 0
                                     ? config.em.min_cluster_size
                                     : auto_min_cluster_size(patches.count(), k);
            prune(model, assignment, min_size);
            save_model_file(opts.save_model, model);
            std::tie(result, stats) = denoise_with_model(img, config, model);
            stats.em_iterations = trace.iterations;
            stats.objective_trace = std::move(trace.objective);
        } else {
            std::tie(result, stats) = denoise(img, config);
        }
        save_pgm(output, result);
        int retained = 0;
        for (int s : stats.cluster_sizes_after)
            if (s >= 0) ++retained;
        out << "flagged=" << stats.flagged << "\n"
            << "patch_size=" << stats.patch_size << "\n"
            << "clusters=" << stats.cluster_count << "\n"
            << "clusters_retained=" << retained << "\n"
            << "em_iterations=" << stats.em_iterations << "\n"
            << "ms_detect=" << stats.ms_detect << "\n"
            << "ms_cluster=" << stats.ms_cluster << "\n"
            << "ms_filter=" << stats.ms_filter << "\n"
            << "ms_total=" << stats.ms_total << "\n";
        if (!opts.stats_json.empty()) {
            std::ofstream js(opts.stats_json);
            if (!js) throw io_error("cannot open '" + opts.stats_json + "' for writing");
            js << "{\"flagged\":" << stats.flagged << ",\"patch_size\":" << stats.patch_size
               << ",\"clusters\":" << stats.cluster_count
               << ",\"clusters_retained\":" << retained
               << ",\"em_iterations\":" << stats.em_iterations << ",\"objective_trace\":[";
            for (std::size_t i = 0; i < stats.objective_trace.size(); ++i)
                js << (i ? "," : "") << stats.objective_trace[i];
            js << "],\"cluster_sizes_before\":[";
            for (std::size_t i = 0; i < stats.cluster_sizes_before.size(); ++i)
                js << (i ? "," : "") << stats.cluster_sizes_before[i];
            js << "],\"cluster_sizes_after\":[";
            for (std::size_t i = 0; i < stats.cluster_sizes_after.size(); ++i)
                js << (i ? "," : "") << stats.cluster_sizes_after[i];
            js << "],\"ms_total\":" << stats.ms_total << "}\n";
        }
    });
}

/// `evaluate`: prints one CSV line "psnr_db,ssim,mse".
inline int cmd_evaluate(const std::string& reference, const std::string& test,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::run_guarded(err, [&] {
        const QualityReport rep = evaluate(load_pgm(reference), load_pgm(test));
        out << detail::format_psnr(rep.psnr_db) << ',' << detail::format_metric(rep.ssim) << ','
            << detail::format_mse(rep.mse) << "\n";
    });
}

/// `sweep`: inject -> denoise -> evaluate over the grid, plus median and AMF
/// baselines once per (density, trial). CSV schema:
/// density,L,K,trial,seed,method,psnr_db,ssim,mse,runtime_ms,status
inline int cmd_sweep(const std::string& input, const SweepSpec& spec, const std::string& csv_path,
                     const DenoiseConfig& base_config = {}, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    return detail::run_guarded(err, [&] {
        spec.validate();
        const GrayImage clean = load_pgm(input);
        std::ofstream csv(csv_path);
        if (!csv) throw io_error("cannot open '" + csv_path + "' for writing");
        csv << "density,L,K,trial,seed,method,psnr_db,ssim,mse,runtime_ms,status\n";

        auto emit = [&](double density, int l, int k, int trial, std::uint32_t seed,
                        const std::string& method, const GrayImage* result, double ms,
                        const std::string& status) {
            csv << density << ',' << l << ',' << k << ',' << trial << ',' << seed << ','
                << method << ',';
            if (result) {
                const QualityReport rep = evaluate(clean, *result);
                csv << detail::format_psnr(rep.psnr_db) << ',' << detail::format_metric(rep.ssim)
                    << ',' << detail::format_mse(rep.mse);
            } else {
                csv << ",,";
            }
            csv << ',' << ms << ',' << status << "\n";
        };

        for (std::size_t di = 0; di < spec.densities.size(); ++di) {
            const double density = spec.densities[di];
            for (int trial = 0; trial < spec.trials_per_cell; ++trial) {
                const std::uint32_t seed =
                    spec.seed_base + 1009u * static_cast<std::uint32_t>(di) +
                    static_cast<std::uint32_t>(trial);
                NoiseParams params;
                params.density = density;
                params.salt_fraction = spec.salt_fraction;
                params.seed = seed;
                auto [noisy, mask] = inject(clean, params);
                for (int l : spec.patch_sizes) {
                    for (int k : spec.cluster_counts) {
                        DenoiseConfig config = base_config;
                        config.patch_size = l;
                        config.cluster_count = k;
                        config.em.seed = seed;
                        const auto t0 = std::chrono::steady_clock::now();
                        try {
                            auto [result, stats] = denoise(noisy, config);
                            emit(density, l, k, trial, seed, "gmm-nlsf", &result,
                                 detail::elapsed_ms(t0), "ok");
                        } catch (const std::exception& e) {
                            std::string msg = e.what();
                            for (char& ch : msg)
                                if (ch == ',' || ch == '\n') ch = ';';
                            emit(density, l, k, trial, seed, "gmm-nlsf", nullptr,
                                 detail::elapsed_ms(t0), msg);
                        }
                    }
                }
                {
                    const auto t0 = std::chrono::steady_clock::now();
                    const GrayImage med = median_filter(noisy, 3);
                    emit(density, 0, 0, trial, seed, "median", &med, detail::elapsed_ms(t0), "ok");
                }
                {
                    const auto t0 = std::chrono::steady_clock::now();
                    const GrayImage amf = adaptive_median_filter(noisy);
                    emit(density, 0, 0, trial, seed, "amf", &amf, detail::elapsed_ms(t0), "ok");
                }
            }
        }
        if (!csv) throw io_error("write failed for '" + csv_path + "'");
        out << "wrote " << csv_path << "\n";
    });
}

}  // namespace spd
