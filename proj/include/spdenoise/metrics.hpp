#pragma once

#include <cmath>
#include <limits>

#include "spdenoise/image.hpp"

namespace spd {

struct QualityReport {
    double psnr_db = 0.0;  // +infinity when mse == 0
    double ssim = 0.0;
    double mse = 0.0;
};

inline double mse(const GrayImage& reference, const GrayImage& test) {
    if (reference.width != test.width || reference.height != test.height)
        throw config_error("mse: image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double d = static_cast<double>(reference.data[i]) - static_cast<double>(test.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(reference.data.size());
}

/// 10 log10(255^2 / MSE); +infinity for identical images.
inline double psnr(const GrayImage& reference, const GrayImage& test) {
    const double m = mse(reference, test);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

/// SSIM with 8x8 uniform windows at stride 1, C1 = (0.01*255)^2,
/// C2 = (0.03*255)^2, averaged over all windows.
inline double ssim(const GrayImage& reference, const GrayImage& test) {
    if (reference.width != test.width || reference.height != test.height)
        throw config_error("ssim: image dimensions differ");
    constexpr int W = 8;
    if (reference.width < W || reference.height < W)
        throw config_error("ssim: images must be at least 8x8");
    constexpr double C1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double C2 = (0.03 * 255.0) * (0.03 * 255.0);
    constexpr double inv_n = 1.0 / (W * W);

    double total = 0.0;
    long windows = 0;
    for (int r = 0; r + W <= reference.height; ++r) {
        for (int c = 0; c + W <= reference.width; ++c) {
            double sum_a = 0.0, sum_b = 0.0;
            for (int i = 0; i < W; ++i)
                for (int j = 0; j < W; ++j) {
                    sum_a += reference.at(r + i, c + j);
                    sum_b += test.at(r + i, c + j);
                }
            const double mu_a = sum_a * inv_n;
            const double mu_b = sum_b * inv_n;
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int i = 0; i < W; ++i)
                for (int j = 0; j < W; ++j) {
                    const double da = reference.at(r + i, c + j) - mu_a;
                    const double db = test.at(r + i, c + j) - mu_b;
                    var_a += da * da;
                    var_b += db * db;
                    cov += da * db;
                }
            var_a *= inv_n;
            var_b *= inv_n;
            cov *= inv_n;
            total += ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
                     ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

inline QualityReport evaluate(const GrayImage& reference, const GrayImage& test) {
    QualityReport rep;
    rep.mse = mse(reference, test);
    rep.psnr_db = psnr(reference, test);
    rep.ssim = ssim(reference, test);
    return rep;
}

}  // namespace spd
