#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "kneeloc/image_io.hpp"
#include "kneeloc/rng.hpp"
#include "test_util.hpp"

using namespace kneeloc;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

/// Assemble a PNG from already-filtered raw scanlines, for exercising the
/// decoder against arbitrary filter types and color types.
std::vector<std::uint8_t> make_png(const std::vector<std::uint8_t>& raw, std::uint32_t w,
                                   std::uint32_t h, int bit_depth, int color_type) {
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    REQUIRE(compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) == Z_OK);
    compressed.resize(bound);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    auto chunk = [&out](const char* type, const std::uint8_t* data, std::size_t len) {
        put_be32(out, std::uint32_t(len));
        std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        if (len) out.insert(out.end(), data, data + len);
        put_be32(out, std::uint32_t(crc32(0L, &out[start], uInt(4 + len))));
    };
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, w);
    put_be32(ihdr, h);
    ihdr.push_back(std::uint8_t(bit_depth));
    ihdr.push_back(std::uint8_t(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr.data(), ihdr.size());
    chunk("IDAT", compressed.data(), compressed.size());
    chunk("IEND", nullptr, 0);
    return out;
}

} // namespace

TEST_CASE("pgm: smallest legal P2 file") {
    GrayImage img = decode_pgm(bytes_of("P2 2 2 255 0 1 2 3"));
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    CHECK(img.depth() == BitDepth::Eight);
    CHECK(img.pixels() == std::vector<std::uint16_t>{0, 1, 2, 3});
}

TEST_CASE("pgm: header comments are skipped") {
    GrayImage img = decode_pgm(bytes_of("P2\n# a comment\n2 2\n# another\n255\n10 20 30 40"));
    CHECK(img.at(1, 1) == 40);
}

TEST_CASE("pgm: 16-bit P5 is big-endian and keeps its depth") {
    std::string header = "P5\n2 2\n65535\n";
    std::vector<std::uint8_t> data = bytes_of(header);
    const std::uint8_t raster[8] = {0x01, 0x02, 0x00, 0xff, 0xab, 0xcd, 0xff, 0xff};
    data.insert(data.end(), raster, raster + 8);
    GrayImage img = decode_pgm(data);
    CHECK(img.depth() == BitDepth::Sixteen);
    CHECK(img.at(0, 0) == 0x0102);
    CHECK(img.at(1, 0) == 0x00ff);
    CHECK(img.at(0, 1) == 0xabcd);
    CHECK(img.at(1, 1) == 0xffff);
}

TEST_CASE("pgm: malformed inputs name the offset or reason") {
    CHECK_THROWS_AS(decode_pgm(bytes_of("P6 2 2 255 ....")), DecodeError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P2 2 2")), DecodeError);          // header truncated
    CHECK_THROWS_AS(decode_pgm(bytes_of("P2 2 2 255 0 1 2")), DecodeError); // sample missing
    CHECK_THROWS_AS(decode_pgm(bytes_of("P2 2 2 99999 0 1 2 3")), DecodeError);
    CHECK_THROWS_WITH(decode_pgm(bytes_of("P5 2 2 255 ")), Catch::Matchers::ContainsSubstring("truncated"));
    CHECK_THROWS_AS(decode_pgm(bytes_of("P2 2 2 100 0 1 2 255")), DecodeError); // > maxval
}

TEST_CASE("pgm: round-trip through encode_pgm") {
    Rng rng(11);
    for (BitDepth depth : {BitDepth::Eight, BitDepth::Sixteen}) {
        GrayImage img = testutil::random_image(rng, 13, 7, depth);
        CHECK(decode_pgm(encode_pgm(img)) == img);
    }
}

TEST_CASE("png: round-trip through encode_png") {
    Rng rng(12);
    for (BitDepth depth : {BitDepth::Eight, BitDepth::Sixteen}) {
        GrayImage img = testutil::random_image(rng, 21, 9, depth);
        CHECK(decode_png(encode_png(img)) == img);
    }
}

TEST_CASE("png: every filter type defilters correctly") {
    // 3x3 8-bit grayscale, values chosen to exercise the byte arithmetic.
    const std::uint8_t rows[3][3] = {{10, 60, 110}, {40, 90, 200}, {250, 30, 140}};
    auto expect = [&rows]() {
        GrayImage img(3, 3, BitDepth::Eight);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) img.at(x, y) = rows[y][x];
        return img;
    }();

    auto filtered = [&rows](int filter_type) {
        std::vector<std::uint8_t> raw;
        std::uint8_t prev[3] = {0, 0, 0};
        for (int y = 0; y < 3; ++y) {
            raw.push_back(std::uint8_t(filter_type));
            std::uint8_t cur[3];
            for (int x = 0; x < 3; ++x) {
                int v = rows[y][x];
                int a = x > 0 ? rows[y][x - 1] : 0;
                int b = prev[x];
                int c = x > 0 ? prev[x - 1] : 0;
                int out = v;
                switch (filter_type) {
                    case 0: break;
                    case 1: out = v - a; break;
                    case 2: out = v - b; break;
                    case 3: out = v - (a + b) / 2; break;
                    case 4: {
                        int p = a + b - c;
                        int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                        int pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                        out = v - pred;
                        break;
                    }
                }
                raw.push_back(std::uint8_t(out & 0xff));
                cur[x] = std::uint8_t(v);
            }
            std::memcpy(prev, cur, 3);
        }
        return raw;
    };

    for (int f = 0; f <= 4; ++f) {
        CAPTURE(f);
        CHECK(decode_png(make_png(filtered(f), 3, 3, 8, 0)) == expect);
    }
}

TEST_CASE("png: ancillary chunks are skipped") {
    Rng rng(14);
    GrayImage img = testutil::random_image(rng, 9, 7);
    std::vector<std::uint8_t> bytes = encode_png(img);

    // Splice a tEXt chunk between IHDR and IDAT (after signature + IHDR).
    const std::size_t insert_at = 8 + 12 + 13;
    std::vector<std::uint8_t> text_chunk;
    const char* payload = "Commenthello";
    put_be32(text_chunk, 12);
    std::size_t start = text_chunk.size();
    const char* type = "tEXt";
    text_chunk.insert(text_chunk.end(), type, type + 4);
    text_chunk.insert(text_chunk.end(), payload, payload + 12);
    put_be32(text_chunk, std::uint32_t(crc32(0L, &text_chunk[start], 16)));
    bytes.insert(bytes.begin() + long(insert_at), text_chunk.begin(), text_chunk.end());

    CHECK(decode_png(bytes) == img);
}

TEST_CASE("png: 16-bit rows defilter with two-byte pixels") {
    // 2x2 16-bit grayscale, Sub filter on the second row: the left
    // neighbour for byte i is byte i-2.
    const std::uint16_t vals[2][2] = {{0x1234, 0xabcd}, {0x0102, 0x0304}};
    std::vector<std::uint8_t> raw;
    raw.push_back(0); // row 0: none
    for (int x = 0; x < 2; ++x) {
        raw.push_back(std::uint8_t(vals[0][x] >> 8));
        raw.push_back(std::uint8_t(vals[0][x] & 0xff));
    }
    raw.push_back(1); // row 1: sub
    std::uint8_t row1[4] = {std::uint8_t(vals[1][0] >> 8), std::uint8_t(vals[1][0] & 0xff),
                            std::uint8_t(vals[1][1] >> 8), std::uint8_t(vals[1][1] & 0xff)};
    for (int i = 0; i < 4; ++i)
        raw.push_back(std::uint8_t((row1[i] - (i >= 2 ? row1[i - 2] : 0)) & 0xff));

    GrayImage img = decode_png(make_png(raw, 2, 2, 16, 0));
    CHECK(img.depth() == BitDepth::Sixteen);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) CHECK(img.at(x, y) == vals[y][x]);
}

TEST_CASE("png: rejects non-grayscale and unsupported layouts") {
    // RGB color type 2: three bytes per pixel, filter 0 rows.
    std::vector<std::uint8_t> rgb_raw;
    for (int y = 0; y < 2; ++y) {
        rgb_raw.push_back(0);
        for (int i = 0; i < 6; ++i) rgb_raw.push_back(std::uint8_t(i * 10));
    }
    CHECK_THROWS_WITH(decode_png(make_png(rgb_raw, 2, 2, 8, 2)),
                      Catch::Matchers::ContainsSubstring("non-grayscale"));

    std::vector<std::uint8_t> gray_raw = {0, 1, 2, 0, 3, 4};
    CHECK_THROWS_WITH(decode_png(make_png(gray_raw, 2, 2, 4, 0)),
                      Catch::Matchers::ContainsSubstring("bit depth"));
}

TEST_CASE("png: corrupt streams are reported") {
    Rng rng(5);
    GrayImage img = testutil::random_image(rng, 8, 8);
    std::vector<std::uint8_t> good = encode_png(img);
    SECTION("bad signature") {
        good[1] = 'X';
        CHECK_THROWS_AS(decode_png(good), DecodeError);
    }
    SECTION("flipped payload byte breaks the chunk crc") {
        good[good.size() / 2] ^= 0x40;
        CHECK_THROWS_WITH(decode_png(good), Catch::Matchers::ContainsSubstring("crc"));
    }
    SECTION("truncated file") {
        good.resize(good.size() / 2);
        CHECK_THROWS_AS(decode_png(good), DecodeError);
    }
}

TEST_CASE("image_io: sniffing dispatches and rejects unknown bytes") {
    Rng rng(31);
    GrayImage img = testutil::random_image(rng, 6, 5);
    CHECK(decode(encode_png(img)) == img);
    CHECK(decode(encode_pgm(img)) == img);
    CHECK_THROWS_WITH(decode(bytes_of("GIF89a.....")),
                      Catch::Matchers::ContainsSubstring("unknown image format"));
}

TEST_CASE("image_io: file round-trip and missing-file error") {
    testutil::TempDir dir("imgio");
    Rng rng(32);
    GrayImage img = testutil::random_image(rng, 10, 11, BitDepth::Sixteen);
    save_png(dir.path / "a.png", img);
    CHECK(load_image(dir.path / "a.png") == img);
    save_pgm(dir.path / "a.pgm", img);
    CHECK(load_image(dir.path / "a.pgm") == img);
    CHECK_THROWS_AS(load_image(dir.path / "missing.png"), IoError);
}

TEST_CASE("GrayImage invariants") {
    CHECK_THROWS_AS(GrayImage(0, 4, BitDepth::Eight), ContractError);
    CHECK_THROWS_AS(GrayImage(2, 2, BitDepth::Eight, {1, 2, 3}), ContractError);
    CHECK_THROWS_AS(GrayImage(2, 1, BitDepth::Eight, {300, 0}), ContractError);
    GrayImage ok(2, 1, BitDepth::Sixteen, {300, 0});
    CHECK(ok.at(0, 0) == 300);
}
