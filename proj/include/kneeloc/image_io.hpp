#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "kneeloc/image.hpp"
#include "kneeloc/pgm.hpp"
#include "kneeloc/png_codec.hpp"

namespace kneeloc {

enum class ImageFormat { Pgm, Png };

/// Sniff the container from the leading bytes.
inline ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P') return ImageFormat::Png;
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5'))
        return ImageFormat::Pgm;
    throw DecodeError("unknown image format (not PGM or PNG)");
}

inline GrayImage decode(std::span<const std::uint8_t> bytes) {
    return sniff_format(bytes) == ImageFormat::Png ? decode_png(bytes) : decode_pgm(bytes);
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed on " + path.string());
}

inline GrayImage load_image(const std::filesystem::path& path) {
    try {
        return decode(read_file(path));
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

inline void save_png(const std::filesystem::path& path, const GrayImage& img) {
    write_file(path, encode_png(img));
}

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
    write_file(path, encode_pgm(img));
}

} // namespace kneeloc
