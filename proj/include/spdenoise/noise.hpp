#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include "spdenoise/image.hpp"

namespace spd {

enum class NoiseKind : std::uint8_t { none = 0, pepper = 1, salt = 2 };

/// Per-pixel suspicion flags. kind[i] is meaningful exactly where flags[i] is set.
struct NoiseMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> flags;
    std::vector<NoiseKind> kind;

    NoiseMask() = default;
    NoiseMask(int w, int h)
        : width(w), height(h),
          flags(static_cast<std::size_t>(w) * h, 0),
          kind(static_cast<std::size_t>(w) * h, NoiseKind::none) {}

    bool flagged(int r, int c) const { return flags[static_cast<std::size_t>(r) * width + c] != 0; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto f : flags) n += f != 0;
        return n;
    }
    bool operator==(const NoiseMask& o) const = default;
};

struct NoiseParams {
    double density = 0.0;        // probability a pixel is corrupted
    double salt_fraction = 0.5;  // share of corrupted pixels set to 255
    std::uint32_t seed = 0;

    void validate() const {
        if (density < 0.0 || density > 1.0) throw config_error("noise density must be in [0,1]");
        if (salt_fraction < 0.0 || salt_fraction > 1.0)
            throw config_error("salt_fraction must be in [0,1]");
    }
};

namespace detail {
// 32-bit mt19937 draw mapped to [0,1). mt19937 output is fully specified by
// the standard, so injection is reproducible across platforms.
inline double uniform01(std::mt19937& rng) {
    return static_cast<double>(rng()) * (1.0 / 4294967296.0);
}
}  // namespace detail

/// Corrupts each pixel independently with probability params.density;
/// a corrupted pixel becomes 255 with probability salt_fraction, else 0.
inline std::pair<GrayImage, NoiseMask> inject(const GrayImage& img, const NoiseParams& params) {
    params.validate();
    GrayImage out = img;
    NoiseMask mask(img.width, img.height);
    std::mt19937 rng(params.seed);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (detail::uniform01(rng) < params.density) {
            bool salt = detail::uniform01(rng) < params.salt_fraction;
            out.data[i] = salt ? 255 : 0;
            mask.flags[i] = 1;
            mask.kind[i] = salt ? NoiseKind::salt : NoiseKind::pepper;
        }
    }
    return {std::move(out), std::move(mask)};
}

/// Threshold detector: pepper when value <= t_p, salt when value >= t_s.
/// Defaults (0,255) flag exactly the dynamic-range extremes.
inline NoiseMask detect(const GrayImage& img, int t_p = 0, int t_s = 255) {
    if (t_p < 0 || t_s > 255 || t_p >= t_s)
        throw config_error("detector thresholds require 0 <= t_p < t_s <= 255");
    NoiseMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        int v = img.data[i];
        if (v <= t_p) {
            mask.flags[i] = 1;
            mask.kind[i] = NoiseKind::pepper;
        } else if (v >= t_s) {
            mask.flags[i] = 1;
            mask.kind[i] = NoiseKind::salt;
        }
    }
    return mask;
}

/// Heuristic threshold pick from the histogram: t_p is the largest v <= 10
/// whose bin spikes above 2x the median bin, t_s the smallest v >= 245 doing
/// the same. Falls back to the exact extremes (0, 255).
inline std::pair<int, int> estimate_thresholds(const GrayImage& img) {
    std::vector<std::size_t> hist(256, 0);
    for (auto v : img.data) ++hist[v];
    std::vector<std::size_t> sorted = hist;
    std::nth_element(sorted.begin(), sorted.begin() + 128, sorted.end());
    const double median_bin = static_cast<double>(sorted[128]);
    int t_p = 0, t_s = 255;
    for (int v = 10; v >= 0; --v)
        if (static_cast<double>(hist[v]) > 2.0 * median_bin) { t_p = v; break; }
    for (int v = 245; v <= 255; ++v)
        if (static_cast<double>(hist[v]) > 2.0 * median_bin) { t_s = v; break; }
    if (t_p >= t_s) return {0, 255};  // degenerate histogram, keep exact extremes
    return {t_p, t_s};
}

/// Mask as a PGM-compatible image: 0 = clean, 255 = flagged.
inline GrayImage mask_to_image(const NoiseMask& mask) {
    GrayImage img(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.flags.size(); ++i) img.data[i] = mask.flags[i] ? 255 : 0;
    return img;
}

/// Sidecar CSV "row,col,kind" with kind in {salt,pepper}.
inline void write_mask_csv(std::ostream& out, const NoiseMask& mask) {
    out << "row,col,kind\n";
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c) {
            std::size_t i = static_cast<std::size_t>(r) * mask.width + c;
            if (mask.flags[i])
                out << r << ',' << c << ',' << (mask.kind[i] == NoiseKind::salt ? "salt" : "pepper") << '\n';
        }
}

}  // namespace spd
