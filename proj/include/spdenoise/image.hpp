#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "spdenoise/errors.hpp"

namespace spd {

/// 8-bit grayscale image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw config_error("image dimensions must be >= 1");
    }

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }

    bool operator==(const GrayImage& o) const = default;
};

namespace detail {

// Reads the next whitespace/comment-delimited header token. '#' starts a
// comment running to end of line.
inline std::string next_pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
        tok.push_back(static_cast<char>(bytes[pos]));
        ++pos;
    }
    return tok;
}

inline long parse_pgm_int(const std::string& tok, const char* what) {
    if (tok.empty()) throw parse_error(std::string("pgm: missing ") + what);
    for (char ch : tok)
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw parse_error(std::string("pgm: non-numeric ") + what + " '" + tok + "'");
    return std::stol(tok);
}

}  // namespace detail

/// Decodes a binary PGM (magic "P5", maxval <= 255).
inline GrayImage read_pgm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (detail::next_pgm_token(bytes, pos) != "P5")
        throw parse_error("pgm: bad magic, expected P5");
    long w = detail::parse_pgm_int(detail::next_pgm_token(bytes, pos), "width");
    long h = detail::parse_pgm_int(detail::next_pgm_token(bytes, pos), "height");
    long maxval = detail::parse_pgm_int(detail::next_pgm_token(bytes, pos), "maxval");
    if (w < 1 || h < 1) throw parse_error("pgm: zero or negative dimension");
    if (maxval < 1 || maxval > 255) throw parse_error("pgm: maxval out of range, must be 1..255");
    // Exactly one whitespace byte separates the header from the payload.
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw parse_error("pgm: missing header terminator");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < need) throw parse_error("pgm: truncated pixel payload");
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::copy(bytes.begin() + pos, bytes.begin() + pos + need, img.data.begin());
    return img;
}

/// Canonical binary PGM encoding: "P5\n<w> <h>\n255\n" then raw bytes.
inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_pgm(bytes);
}

inline void save_pgm(const std::string& path, const GrayImage& img) {
    auto bytes = write_pgm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed for '" + path + "'");
}

}  // namespace spd
