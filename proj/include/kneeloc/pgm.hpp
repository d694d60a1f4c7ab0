#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kneeloc/image.hpp"

namespace kneeloc {

namespace pgm_detail {

inline bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

[[noreturn]] inline void fail(const std::string& reason, std::size_t offset) {
    throw DecodeError("pgm: " + reason + " at byte " + std::to_string(offset));
}

/// Skip whitespace and '#' comments (which run to end of line).
inline void skip_ws(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (is_space(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            return;
        }
    }
}

inline long parse_uint(std::span<const std::uint8_t> bytes, std::size_t& pos,
                       const char* what, long max) {
    skip_ws(bytes, pos);
    if (pos >= bytes.size()) fail(std::string("truncated header, missing ") + what, pos);
    if (bytes[pos] < '0' || bytes[pos] > '9')
        fail(std::string("expected digit for ") + what, pos);
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        v = v * 10 + (bytes[pos] - '0');
        if (v > max) fail(std::string(what) + " out of range", pos);
        ++pos;
    }
    return v;
}

} // namespace pgm_detail

/// Decode a P2 (ASCII) or P5 (binary) PGM. maxval <= 255 yields an 8-bit
/// image, larger maxval a 16-bit one. 16-bit P5 samples are big-endian.
inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    using namespace pgm_detail;
    std::size_t pos = 0;
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        fail("magic is not P2 or P5", 0);
    const bool binary = bytes[1] == '5';
    pos = 2;

    long width = parse_uint(bytes, pos, "width", 1 << 20);
    long height = parse_uint(bytes, pos, "height", 1 << 20);
    long maxval = parse_uint(bytes, pos, "maxval", 65535);
    if (width < 2 || height < 2) fail("image smaller than 2x2", pos);
    if (maxval < 1) fail("maxval must be positive", pos);

    const BitDepth depth = maxval <= 255 ? BitDepth::Eight : BitDepth::Sixteen;
    const std::size_t count = std::size_t(width) * std::size_t(height);
    std::vector<std::uint16_t> pixels(count);

    if (binary) {
        // Exactly one whitespace byte separates maxval from raster data.
        if (pos >= bytes.size() || !is_space(bytes[pos]))
            fail("missing whitespace before raster", pos);
        ++pos;
        const int bpp = depth == BitDepth::Sixteen ? 2 : 1;
        if (bytes.size() - pos < count * bpp)
            fail("truncated raster, need " + std::to_string(count * bpp) + " bytes, have " +
                     std::to_string(bytes.size() - pos),
                 pos);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t v;
            if (bpp == 2) {
                v = std::uint16_t((bytes[pos] << 8) | bytes[pos + 1]);
                pos += 2;
            } else {
                v = bytes[pos++];
            }
            if (v > maxval) fail("sample exceeds maxval", pos - bpp);
            pixels[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i)
            pixels[i] = std::uint16_t(parse_uint(bytes, pos, "sample", maxval));
    }
    return GrayImage(int(width), int(height), depth, std::move(pixels));
}

/// Encode as binary P5 with maxval 255 or 65535 (16-bit big-endian).
inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const bool wide = img.depth() == BitDepth::Sixteen;
    std::string header = "P5\n" + std::to_string(img.width()) + " " +
                         std::to_string(img.height()) + "\n" + (wide ? "65535" : "255") + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.pixels().size() * (wide ? 2 : 1));
    for (std::uint16_t v : img.pixels()) {
        if (wide) out.push_back(std::uint8_t(v >> 8));
        out.push_back(std::uint8_t(v & 0xff));
    }
    return out;
}

} // namespace kneeloc
