#pragma once

#include <chrono>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spdenoise/filter.hpp"
#include "spdenoise/gmm.hpp"
#include "spdenoise/image.hpp"
#include "spdenoise/noise.hpp"
#include "spdenoise/patches.hpp"

namespace spd {

struct DenoiseConfig {
    int patch_size = 3;      // L
    int cluster_count = 300; // K, clamped to the patch count at run time
    double beta = 1.0;       // Dirichlet concentration
    EmSettings em;
    FilterSettings filter;
    int t_p = 0;
    int t_s = 255;

    void validate() const {
        if (patch_size < 2) throw config_error("patch size must be >= 2");
        if (cluster_count < 1) throw config_error("cluster count must be >= 1");
        if (beta <= 0.0) throw config_error("beta must be > 0");
        em.validate();
        filter.validate();
        if (t_p < 0 || t_s > 255 || t_p >= t_s)
            throw config_error("thresholds require 0 <= t_p < t_s <= 255");
    }
};

struct RunStats {
    std::size_t flagged = 0;
    int patch_size = 0;               // L actually used
    int cluster_count = 0;            // K actually used (after clamping)
    std::vector<int> cluster_sizes_before;
    std::vector<int> cluster_sizes_after;  // retained clusters only, -1 for abandoned
    int em_iterations = 0;
    std::vector<double> objective_trace;
    double ms_detect = 0.0;
    double ms_cluster = 0.0;
    double ms_filter = 0.0;
    double ms_total = 0.0;
};

namespace detail {
inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

/// Detect -> cluster -> filter -> fuse. Clean pixels pass through bit-exact;
/// an image with no flagged pixels is returned unchanged.
inline std::pair<GrayImage, RunStats> denoise(const GrayImage& img, const DenoiseConfig& config) {
    config.validate();
    RunStats stats;
    const auto t_total = std::chrono::steady_clock::now();

    auto t0 = std::chrono::steady_clock::now();
    const NoiseMask mask = detect(img, config.t_p, config.t_s);
    stats.flagged = mask.count();
    stats.ms_detect = detail::elapsed_ms(t0);
    stats.patch_size = config.patch_size;

    if (stats.flagged == 0) {
        stats.ms_total = detail::elapsed_ms(t_total);
        return {img, std::move(stats)};
    }

    t0 = std::chrono::steady_clock::now();
    const PatchSet patches = extract(img, mask, config.patch_size);
    const int k = std::min<int>(config.cluster_count, patches.count());
    stats.cluster_count = k;

    EmSettings em = config.em;
    FitTrace trace;
    auto [model, assignment] = fit(patches.vectors, k, em, config.beta, &trace);
    stats.em_iterations = trace.iterations;
    stats.objective_trace = std::move(trace.objective);

    std::vector<int> sizes(k, 0);
    for (int label : assignment.labels) ++sizes[label];
    stats.cluster_sizes_before = sizes;

    const int min_size = em.min_cluster_size > 0
                             ? em.min_cluster_size
                             : auto_min_cluster_size(patches.count(), k);
    prune(model, assignment, min_size);
    stats.cluster_sizes_after.assign(k, -1);
    for (int j = 0; j < k; ++j)
        if (model.retained[j]) stats.cluster_sizes_after[j] = 0;
    for (int label : assignment.labels) ++stats.cluster_sizes_after[label];
    stats.ms_cluster = detail::elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    const ClusterIndex index(assignment, k);
    std::unordered_map<int, std::uint8_t> restored;
    restored.reserve(stats.flagged);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            if (!mask.flagged(r, c)) continue;
            const int target = patches.index_of(r, c);
            const CandidateSet cs =
                build_candidates(target, assignment, model, patches, config.filter, index);
            std::uint8_t value;
            if (cs.reference_indices.empty()) {
                // degenerate single-cluster-of-one case: keep the mean fill
                value = detail::round_intensity(patches.vectors(target, patches.center_offset()));
            } else {
                value = restore_pixel(target, cs, patches, config.filter);
            }
            restored.emplace(static_cast<int>(static_cast<std::size_t>(r) * img.width + c), value);
        }
    }
    GrayImage out = fuse(img, mask, restored);
    stats.ms_filter = detail::elapsed_ms(t0);
    stats.ms_total = detail::elapsed_ms(t_total);
    return {std::move(out), std::move(stats)};
}

/// Variant reusing a previously fitted (and typically pruned) model:
/// responsibilities are recomputed for this image's patches, no EM run.
inline std::pair<GrayImage, RunStats> denoise_with_model(const GrayImage& img,
                                                         const DenoiseConfig& config,
                                                         const GmmModel& model) {
    config.validate();
    RunStats stats;
    const auto t_total = std::chrono::steady_clock::now();
    const NoiseMask mask = detect(img, config.t_p, config.t_s);
    stats.flagged = mask.count();
    stats.patch_size = config.patch_size;
    stats.cluster_count = model.k();
    if (stats.flagged == 0) {
        stats.ms_total = detail::elapsed_ms(t_total);
        return {img, std::move(stats)};
    }
    const PatchSet patches = extract(img, mask, config.patch_size);
    if (patches.dim() != model.dim())
        throw config_error("model dimension does not match patch size");

    Assignment assignment;
    assignment.responsibilities = e_step(patches.vectors, model);
    assignment.labels.resize(patches.count());
    for (int i = 0; i < patches.count(); ++i) {
        Eigen::Index best;
        assignment.responsibilities.row(i).maxCoeff(&best);
        assignment.labels[i] = static_cast<int>(best);
    }

    const ClusterIndex index(assignment, model.k());
    std::unordered_map<int, std::uint8_t> restored;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            if (!mask.flagged(r, c)) continue;
            const int target = patches.index_of(r, c);
            const CandidateSet cs =
                build_candidates(target, assignment, model, patches, config.filter, index);
            const std::uint8_t value =
                cs.reference_indices.empty()
                    ? detail::round_intensity(patches.vectors(target, patches.center_offset()))
                    : restore_pixel(target, cs, patches, config.filter);
            restored.emplace(static_cast<int>(static_cast<std::size_t>(r) * img.width + c), value);
        }
    GrayImage out = fuse(img, mask, restored);
    stats.ms_total = detail::elapsed_ms(t_total);
    return {std::move(out), std::move(stats)};
}

/// (L, K) lookup keyed on estimated noise density.
inline DenoiseConfig default_config_for_density(double density) {
    if (density < 0.0 || density > 1.0) throw config_error("density must be in [0,1]");
    DenoiseConfig config;
    struct Row { double max_density; int l; int k; };
    constexpr Row table[] = {
        {0.10, 3, 300}, {0.40, 4, 300}, {0.50, 5, 300}, {0.60, 6, 150},
        {0.70, 7, 150}, {0.80, 8, 150}, {1.00, 11, 150},
    };
    for (const Row& row : table) {
        if (density <= row.max_density + 1e-12) {
            config.patch_size = row.l;
            config.cluster_count = row.k;
            break;
        }
    }
    return config;
}

}  // namespace spd
