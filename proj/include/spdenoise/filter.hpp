#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "spdenoise/gmm.hpp"
#include "spdenoise/image.hpp"
#include "spdenoise/noise.hpp"
#include "spdenoise/patches.hpp"

namespace spd {

struct FilterSettings {
    double sigma_n = 100.0;  // similarity bandwidth, per-pixel MSD units
    int n_min = 30;          // minimum reference patches
    int n_max = 200;         // cap on references actually used

    void validate() const {
        if (sigma_n <= 1.0) throw config_error("sigma_n must be > 1 (ln sigma_n must be positive)");
        if (n_min < 1 || n_min > n_max) throw config_error("need 1 <= n_min <= n_max");
    }
};

/// References chosen for one corrupted pixel, nearest clusters first.
struct CandidateSet {
    int target_index = -1;
    std::vector<int> reference_indices;  // sorted by masked distance, then index
    std::vector<int> cluster_trail;      // clusters consulted, target's own first
};

/// Patch indices grouped by (post-prune) cluster label.
struct ClusterIndex {
    std::vector<std::vector<int>> members;

    ClusterIndex(const Assignment& assignment, int k) : members(k) {
        for (std::size_t i = 0; i < assignment.labels.size(); ++i)
            members[assignment.labels[i]].push_back(static_cast<int>(i));
    }
};

/// Mean squared difference of mean-filled vectors over positions where
/// neither patch is noise-flagged; over all positions when no mutually
/// clean position exists.
inline double masked_distance(int a, int b, const PatchSet& patches) {
    const int d = patches.dim();
    const auto* ma = patches.noise_submasks.data() + static_cast<std::size_t>(a) * d;
    const auto* mb = patches.noise_submasks.data() + static_cast<std::size_t>(b) * d;
    double acc = 0.0;
    int n = 0;
    for (int i = 0; i < d; ++i) {
        if (!ma[i] && !mb[i]) {
            const double diff = patches.vectors(a, i) - patches.vectors(b, i);
            acc += diff * diff;
            ++n;
        }
    }
    if (n > 0) return acc / n;
    return (patches.vectors.row(a) - patches.vectors.row(b)).squaredNorm() / d;
}

/// exp(-distance / sigma_n) / ln(sigma_n). The 1/ln factor is constant per
/// pixel and cancels under weight normalization.
inline double similarity(double distance, double sigma_n) {
    if (sigma_n <= 1.0) throw config_error("sigma_n must be > 1");
    return std::exp(-distance / sigma_n) / std::log(sigma_n);
}

/// Collects reference patches for a target: its own cluster first, expanding
/// to the nearest retained clusters (by distance between the target vector
/// and cluster means) until n_min is met, then keeps the n_max closest by
/// masked distance.
inline CandidateSet build_candidates(int target, const Assignment& assignment,
                                     const GmmModel& model, const PatchSet& patches,
                                     const FilterSettings& settings,
                                     const ClusterIndex& index) {
    settings.validate();
    if (model.retained_count() == 0) throw pipeline_error("no retained clusters");

    CandidateSet cs;
    cs.target_index = target;
    const int own = assignment.labels[target];
    cs.cluster_trail.push_back(own);
    for (int i : index.members[own])
        if (i != target) cs.reference_indices.push_back(i);

    if (static_cast<int>(cs.reference_indices.size()) < settings.n_min) {
        const Eigen::VectorXd tv = patches.vectors.row(target).transpose();
        std::vector<std::pair<double, int>> order;
        for (int j = 0; j < model.k(); ++j) {
            if (j == own || !model.retained[j]) continue;
            order.emplace_back((tv - model.means.row(j).transpose()).squaredNorm(), j);
        }
        std::sort(order.begin(), order.end());
        for (const auto& [dist, j] : order) {
            if (static_cast<int>(cs.reference_indices.size()) >= settings.n_min) break;
            cs.cluster_trail.push_back(j);
            for (int i : index.members[j])
                if (i != target) cs.reference_indices.push_back(i);
        }
    }

    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(cs.reference_indices.size());
    for (int i : cs.reference_indices) ranked.emplace_back(masked_distance(target, i, patches), i);
    const std::size_t keep = std::min<std::size_t>(ranked.size(), settings.n_max);
    std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end());
    cs.reference_indices.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) cs.reference_indices[i] = ranked[i].second;
    return cs;
}

namespace detail {
// Similarity-weighted average of reference center intensities, before
// rounding. Any constant factor on the similarities cancels.
inline double weighted_center_average(const std::vector<double>& sims,
                                      const std::vector<double>& centers) {
    double s_total = 0.0;
    for (double s : sims) s_total += s;
    if (s_total <= 0.0 || !std::isfinite(s_total)) {
        double acc = 0.0;
        for (double c : centers) acc += c;
        return acc / static_cast<double>(centers.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < sims.size(); ++i) acc += (sims[i] / s_total) * centers[i];
    return acc;
}

inline std::uint8_t round_intensity(double v) {
    double r = std::floor(v + 0.5);  // half-up
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}
}  // namespace detail

/// Restores the target patch's center pixel by a similarity-weighted average
/// of reference centers. A reference whose own center is flagged contributes
/// its mean-filled value (the switching behavior).
inline std::uint8_t restore_pixel(int target, const CandidateSet& candidates,
                                  const PatchSet& patches, const FilterSettings& settings) {
    if (candidates.reference_indices.empty())
        throw pipeline_error("restore_pixel called with no references");
    const int center = patches.center_offset();
    std::vector<double> sims, centers;
    sims.reserve(candidates.reference_indices.size());
    centers.reserve(candidates.reference_indices.size());
    for (int ref : candidates.reference_indices) {
        const double dist = masked_distance(target, ref, patches);
        sims.push_back(std::exp(-dist / settings.sigma_n));
        // mean-filled vector equals the raw pixel at clean centers
        centers.push_back(patches.vectors(ref, center));
    }
    return detail::round_intensity(detail::weighted_center_average(sims, centers));
}

/// Step 4: flagged positions take their restored value, everything else
/// passes through bit-exact.
inline GrayImage fuse(const GrayImage& img, const NoiseMask& mask,
                      const std::unordered_map<int, std::uint8_t>& restored) {
    GrayImage out = img;
    for (std::size_t i = 0; i < mask.flags.size(); ++i) {
        if (!mask.flags[i]) continue;
        auto it = restored.find(static_cast<int>(i));
        if (it == restored.end())
            throw pipeline_error("restored map is missing a flagged position");
        out.data[i] = it->second;
    }
    return out;
}

}  // namespace spd
