#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "spdenoise/image.hpp"
#include "spdenoise/noise.hpp"

namespace spd {

/// Dense overlapping patch extraction: one L x L patch per image pixel,
/// vectorized row-major to d = L^2 reals. Entries flagged as noise are
/// replaced by the mean of the patch's clean entries (mean-fill), and the
/// submask records which entries were filled.
struct PatchSet {
    int patch_size = 0;              // L
    int rows = 0, cols = 0;          // source image dimensions
    Eigen::MatrixXd vectors;         // (rows*cols) x L^2, mean-filled
    std::vector<std::uint8_t> noise_submasks;  // same shape, row-major

    int dim() const { return patch_size * patch_size; }
    int count() const { return rows * cols; }
    int index_of(int r, int c) const { return r * cols + c; }
    std::pair<int, int> position(int index) const { return {index / cols, index % cols}; }
    /// Offset of the patch's center pixel within the vector.
    int center_offset() const { return ((patch_size - 1) / 2) * patch_size + (patch_size - 1) / 2; }
    bool entry_noisy(int patch, int offset) const {
        return noise_submasks[static_cast<std::size_t>(patch) * dim() + offset] != 0;
    }
};

namespace detail {
// Symmetric reflection: -1 -> 0, -2 -> 1, n -> n-1. Folds repeatedly so it
// stays total even when L approaches the image size.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}
}  // namespace detail

/// Replaces masked entries by the mean of the unmasked ones; if every entry
/// is masked, by global_fallback.
inline Eigen::VectorXd mean_fill(const Eigen::VectorXd& values,
                                 const std::vector<std::uint8_t>& submask,
                                 double global_fallback) {
    Eigen::VectorXd out = values;
    double sum = 0.0;
    int clean = 0;
    for (int i = 0; i < values.size(); ++i) {
        if (!submask[i]) {
            sum += values[i];
            ++clean;
        }
    }
    const double fill = clean > 0 ? sum / clean : global_fallback;
    for (int i = 0; i < values.size(); ++i)
        if (submask[i]) out[i] = fill;
    return out;
}

/// Extracts one patch per pixel with symmetric-reflect border handling.
/// Even L is accepted; its center sits at offset floor((L-1)/2) in each axis.
inline PatchSet extract(const GrayImage& img, const NoiseMask& mask, int patch_size) {
    if (patch_size < 2) throw config_error("patch size must be >= 2");
    if (patch_size > img.width || patch_size > img.height)
        throw config_error("patch size exceeds image dimensions");
    if (mask.width != img.width || mask.height != img.height)
        throw config_error("mask dimensions do not match image");

    const int L = patch_size;
    const int d = L * L;
    const int up = (L - 1) / 2;  // rows above the center; L/2 rows below

    PatchSet set;
    set.patch_size = L;
    set.rows = img.height;
    set.cols = img.width;
    set.vectors.resize(static_cast<Eigen::Index>(img.height) * img.width, d);
    set.noise_submasks.assign(static_cast<std::size_t>(img.height) * img.width * d, 0);

    // Fallback for all-noisy patches: global mean of clean pixels, 128 if none.
    double clean_sum = 0.0;
    std::size_t clean_n = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        if (!mask.flags[i]) {
            clean_sum += img.data[i];
            ++clean_n;
        }
    const double global_fallback = clean_n > 0 ? clean_sum / static_cast<double>(clean_n) : 128.0;

    std::vector<std::uint8_t> sub(d);
    Eigen::VectorXd raw(d);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            for (int dr = 0; dr < L; ++dr) {
                const int rr = detail::reflect_index(r - up + dr, img.height);
                for (int dc = 0; dc < L; ++dc) {
                    const int cc = detail::reflect_index(c - up + dc, img.width);
                    raw[dr * L + dc] = img.at(rr, cc);
                    sub[dr * L + dc] = mask.flagged(rr, cc) ? 1 : 0;
                }
            }
            const int idx = set.index_of(r, c);
            set.vectors.row(idx) = mean_fill(raw, sub, global_fallback).transpose();
            std::copy(sub.begin(), sub.end(),
                      set.noise_submasks.begin() + static_cast<std::size_t>(idx) * d);
        }
    }
    return set;
}

}  // namespace spd
