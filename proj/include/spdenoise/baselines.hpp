#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "spdenoise/image.hpp"
#include "spdenoise/patches.hpp"  // reflect_index

namespace spd {

struct AmfSettings {
    int initial_window = 3;
    int max_window = 11;

    void validate() const {
        if (initial_window < 3 || initial_window % 2 == 0)
            throw config_error("AMF initial window must be odd and >= 3");
        if (max_window < initial_window || max_window % 2 == 0)
            throw config_error("AMF max window must be odd and >= initial window");
    }
};

namespace detail {
inline std::uint8_t window_median(const GrayImage& img, int r, int c, int window,
                                  std::vector<std::uint8_t>& buf) {
    const int half = window / 2;
    buf.clear();
    for (int dr = -half; dr <= half; ++dr) {
        const int rr = reflect_index(r + dr, img.height);
        for (int dc = -half; dc <= half; ++dc)
            buf.push_back(img.at(rr, reflect_index(c + dc, img.width)));
    }
    auto mid = buf.begin() + buf.size() / 2;
    std::nth_element(buf.begin(), mid, buf.end());
    return *mid;
}
}  // namespace detail

/// Fixed-window median filter with reflect padding.
inline GrayImage median_filter(const GrayImage& img, int window) {
    if (window < 3 || window % 2 == 0) throw config_error("median window must be odd and >= 3");
    if (window > img.width || window > img.height)
        throw config_error("median window exceeds image dimensions");
    GrayImage out(img.width, img.height);
    std::vector<std::uint8_t> buf;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            out.at(r, c) = detail::window_median(img, r, c, window, buf);
    return out;
}

/// Two-level adaptive median filter: non-extreme pixels pass through;
/// extreme pixels grow the window while the median stays extreme (up to
/// max_window) and take the final median.
inline GrayImage adaptive_median_filter(const GrayImage& img, const AmfSettings& settings = {}) {
    settings.validate();
    GrayImage out = img;
    std::vector<std::uint8_t> buf;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const std::uint8_t v = img.at(r, c);
            if (v != 0 && v != 255) continue;
            std::uint8_t med = 0;
            for (int w = settings.initial_window; w <= settings.max_window; w += 2) {
                med = detail::window_median(img, r, c, w, buf);
                if (med != 0 && med != 255) break;
            }
            out.at(r, c) = med;
        }
    }
    return out;
}

}  // namespace spd
