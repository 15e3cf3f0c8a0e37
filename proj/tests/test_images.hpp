#pragma once

// Deterministic synthetic images shared by the test suites.

#include <algorithm>
#include <cmath>
#include <random>

#include "spdenoise/image.hpp"

namespace testimg {

// A natural-looking scene: smooth gradient background, a bright disk, a dark
// bar and mild sinusoidal texture. All values stay inside [10, 245] so the
// default detector never false-positives on it.
inline spd::GrayImage scene(int w, int h) {
    spd::GrayImage img(w, h);
    const double cx = w / 2.0, cy = h / 2.0;
    const double radius = std::min(w, h) / 4.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double v = 60.0 + 120.0 * (static_cast<double>(r) + c) / (w + h);
            const double dx = c - cx, dy = r - cy;
            if (std::sqrt(dx * dx + dy * dy) < radius) v = 205.0;
            if (r > h / 8 && r < h / 4 && c > w / 8) v = 45.0;
            v += 14.0 * std::sin(2.0 * 3.14159265358979 * c / 9.0) +
                 9.0 * std::sin(2.0 * 3.14159265358979 * r / 13.0);
            img.at(r, c) = static_cast<std::uint8_t>(std::clamp(v, 10.0, 245.0));
        }
    }
    return img;
}

// A benchmark-style photographic stand-in: smooth shading plus regions of
// fine oriented stripes and a sharp-edged disk, echoing the texture mix of
// the classic test photographs. Values stay inside [10, 245].
inline spd::GrayImage photo(int w, int h) {
    spd::GrayImage img(w, h);
    const double pi = 3.14159265358979;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double v = 70.0 + 100.0 * (0.5 + 0.5 * std::sin(2 * pi * (r + 0.7 * c) / (1.9 * w)));
            // diagonal stripe cloth in the lower-left quadrant
            if (r > h / 2 && c < w / 2) v = 120.0 + 55.0 * std::sin(2 * pi * (c + r) / 6.0);
            // vertical stripes upper-right
            if (r < h / 2 && c > w / 2) v = 130.0 + 50.0 * std::sin(2 * pi * c / 5.0);
            // a bright disk with a sharp edge
            const double dx = c - 0.72 * w, dy = r - 0.75 * h;
            if (std::sqrt(dx * dx + dy * dy) < std::min(w, h) / 6.0)
                v = 200.0 + 20.0 * std::sin(2 * pi * r / 7.0);
            img.at(r, c) = static_cast<std::uint8_t>(std::clamp(v, 10.0, 245.0));
        }
    }
    return img;
}

// Uniform random pixels over the full 0..255 range.
inline spd::GrayImage random_image(int w, int h, std::uint32_t seed) {
    spd::GrayImage img(w, h);
    std::mt19937 rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

// Random pixels restricted to the mid range (no extreme values).
inline spd::GrayImage random_midrange_image(int w, int h, std::uint32_t seed) {
    spd::GrayImage img(w, h);
    std::mt19937 rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(20 + rng() % 216);
    return img;
}

}  // namespace testimg
