#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "kneeloc/image.hpp"

namespace kneeloc {

namespace png_detail {

inline const std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

[[noreturn]] inline void fail(const std::string& reason, std::size_t offset) {
    throw DecodeError("png: " + reason + " at byte " + std::to_string(offset));
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

inline std::vector<std::uint8_t> inflate_all(std::span<const std::uint8_t> in,
                                             std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw DecodeError("png: zlib init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = uInt(in.size());
    zs.next_out = out.data();
    zs.avail_out = uInt(out.size());
    int rc = inflate(&zs, Z_FINISH);
    std::size_t produced = out.size() - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected)
        throw DecodeError("png: truncated or corrupt IDAT stream (inflated " +
                          std::to_string(produced) + " of " + std::to_string(expected) +
                          " bytes)");
    return out;
}

} // namespace png_detail

/// Decode a non-interlaced grayscale PNG with bit depth 8 or 16. Any other
/// color type (RGB, palette, alpha) is rejected as non-grayscale.
inline GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    using namespace png_detail;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        fail("bad signature", 0);

    std::size_t pos = 8;
    bool seen_ihdr = false, seen_iend = false;
    std::uint32_t width = 0, height = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 8 <= bytes.size() && !seen_iend) {
        std::uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + std::size_t(len) > bytes.size()) fail("truncated chunk", pos);
        char type[5] = {};
        std::memcpy(type, &bytes[pos + 4], 4);
        const std::uint8_t* data = &bytes[pos + 8];
        std::uint32_t crc = read_be32(&bytes[pos + 8 + len]);
        std::uint32_t actual = std::uint32_t(
            ::crc32(::crc32(0L, &bytes[pos + 4], 4), data, len));
        if (crc != actual) fail(std::string("crc mismatch in ") + type + " chunk", pos);

        if (std::strcmp(type, "IHDR") == 0) {
            if (len != 13) fail("IHDR length is not 13", pos);
            width = read_be32(data);
            height = read_be32(data + 4);
            bit_depth = data[8];
            int color_type = data[9];
            if (color_type != 0)
                fail("non-grayscale (color type " + std::to_string(color_type) + ")", pos);
            if (bit_depth != 8 && bit_depth != 16)
                fail("unsupported grayscale bit depth " + std::to_string(bit_depth), pos);
            if (data[10] != 0 || data[11] != 0) fail("unsupported compression/filter method", pos);
            if (data[12] != 0) fail("interlaced images unsupported", pos);
            if (width < 2 || height < 2) fail("image smaller than 2x2", pos);
            seen_ihdr = true;
        } else if (std::strcmp(type, "IDAT") == 0) {
            if (!seen_ihdr) fail("IDAT before IHDR", pos);
            idat.insert(idat.end(), data, data + len);
        } else if (std::strcmp(type, "IEND") == 0) {
            seen_iend = true;
        }
        // Ancillary chunks are skipped.
        pos += 12 + std::size_t(len);
    }
    if (!seen_ihdr) fail("missing IHDR", pos);
    if (!seen_iend) fail("missing IEND", pos);
    if (idat.empty()) fail("missing IDAT", pos);

    const int bpp = bit_depth == 16 ? 2 : 1;
    const std::size_t stride = std::size_t(width) * bpp;
    std::vector<std::uint8_t> raw = inflate_all(idat, (stride + 1) * height);

    // Undo per-row filters in place.
    std::vector<std::uint16_t> pixels(std::size_t(width) * height);
    std::vector<std::uint8_t> prev(stride, 0), cur(stride);
    for (std::uint32_t y = 0; y < height; ++y) {
        const std::uint8_t* row = &raw[(stride + 1) * y];
        int filter = row[0];
        for (std::size_t i = 0; i < stride; ++i) {
            int x = row[1 + i];
            int a = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
            int b = prev[i];
            int c = i >= std::size_t(bpp) ? prev[i - bpp] : 0;
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: fail("unknown filter type " + std::to_string(filter), (stride + 1) * y);
            }
            cur[i] = std::uint8_t(x & 0xff);
        }
        for (std::uint32_t xp = 0; xp < width; ++xp)
            pixels[std::size_t(y) * width + xp] =
                bpp == 2 ? std::uint16_t((cur[xp * 2] << 8) | cur[xp * 2 + 1])
                         : std::uint16_t(cur[xp]);
        std::swap(prev, cur);
    }
    return GrayImage(int(width), int(height),
                     bit_depth == 16 ? BitDepth::Sixteen : BitDepth::Eight,
                     std::move(pixels));
}

/// Encode as a non-interlaced grayscale PNG (filter 0 on every row,
/// 16-bit samples big-endian). Output is deterministic for a given image.
inline std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    using namespace png_detail;
    const int bpp = img.depth() == BitDepth::Sixteen ? 2 : 1;
    const std::size_t stride = std::size_t(img.width()) * bpp;

    std::vector<std::uint8_t> raw((stride + 1) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        std::uint8_t* row = &raw[(stride + 1) * std::size_t(y)];
        row[0] = 0;
        for (int x = 0; x < img.width(); ++x) {
            std::uint16_t v = img.at(x, y);
            if (bpp == 2) {
                row[1 + x * 2] = std::uint8_t(v >> 8);
                row[2 + x * 2] = std::uint8_t(v & 0xff);
            } else {
                row[1 + x] = std::uint8_t(v);
            }
        }
    }

    uLongf bound = ::compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (::compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()),
                    Z_DEFAULT_COMPRESSION) != Z_OK)
        throw IoError("png: deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);
    auto chunk = [&out](const char* type, const std::uint8_t* data, std::size_t len) {
        put_be32(out, std::uint32_t(len));
        std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data, data + len);
        put_be32(out, std::uint32_t(::crc32(0L, &out[start], uInt(4 + len))));
    };

    std::uint8_t ihdr[13] = {};
    std::uint8_t wbuf[4], hbuf[4];
    std::vector<std::uint8_t> tmp;
    tmp.reserve(4);
    put_be32(tmp, std::uint32_t(img.width()));
    std::memcpy(wbuf, tmp.data(), 4);
    tmp.clear();
    put_be32(tmp, std::uint32_t(img.height()));
    std::memcpy(hbuf, tmp.data(), 4);
    std::memcpy(ihdr, wbuf, 4);
    std::memcpy(ihdr + 4, hbuf, 4);
    ihdr[8] = std::uint8_t(bpp * 8); // bit depth
    ihdr[9] = 0;                     // grayscale
    chunk("IHDR", ihdr, 13);
    chunk("IDAT", compressed.data(), compressed.size());
    chunk("IEND", nullptr, 0);
    return out;
}

} // namespace kneeloc
