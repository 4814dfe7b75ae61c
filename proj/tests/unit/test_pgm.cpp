#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "patchlr/errors.hpp"
#include "patchlr/pgm.hpp"

using namespace patchlr;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("patchlr_pgm_" + name);
}

Image ramp(int side) {
    Image z(side);
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = static_cast<double>((i * 37) % 256);
    return z;
}

} // namespace

TEST(Pgm, RoundTripBothEncodings) {
    const Image z = ramp(3);
    for (auto enc : {PgmEncoding::Ascii, PgmEncoding::Binary}) {
        const auto path = temp_path(enc == PgmEncoding::Ascii ? "a.pgm" : "b.pgm");
        write_pgm(path, z, enc);
        EXPECT_EQ(read_pgm(path), z);
    }
    EXPECT_EQ(read_pgm(temp_path("a.pgm")), read_pgm(temp_path("b.pgm")));
}

TEST(Pgm, ClampsAndRounds) {
    Image z(2, 0.0);
    z[0] = 255.7;
    z[1] = -3.0;
    z[2] = 17.5;
    z[3] = 17.4;
    const auto path = temp_path("clamp.pgm");
    write_pgm(path, z);
    const Image r = read_pgm(path);
    EXPECT_EQ(r[0], 255.0);
    EXPECT_EQ(r[1], 0.0);
    EXPECT_EQ(r[2], 18.0);
    EXPECT_EQ(r[3], 17.0);
}

TEST(Pgm, ParsesCommentsInHeader) {
    const Image z = parse_pgm("P2\n# made by hand\n2 2\n255\n1 2\n3 4\n");
    EXPECT_EQ(z(1, 1), 4.0);
}

TEST(Pgm, FormatErrorsCarryOffsets) {
    EXPECT_THROW(parse_pgm("P3\n2 2\n255\n"), FormatError);
    EXPECT_THROW(parse_pgm("P2\n2 3\n255\n1 2 3 4 5 6\n"), FormatError); // not square
    try {
        parse_pgm("P2\n2 2\n65535\n1 2 3 4\n");
        FAIL() << "maxval 65535 accepted";
    } catch (const FormatError& e) {
        EXPECT_GT(e.offset(), 0u);
    }
    try {
        parse_pgm(std::string("P5\n2 2\n255\n") + std::string(3, '\x01'));
        FAIL() << "truncated payload accepted";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 11u + 3u);
    }
}

TEST(Pgm, MissingFileIsRuntimeError) {
    EXPECT_THROW(read_pgm("/nonexistent/dir/x.pgm"), std::runtime_error);
}

TEST(Mask, ParseKeepsOrderAndMultiplicity) {
    const SampleSet s = parse_mask("# header\n1 2\n\n0 0\n1 2\n", 3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.draws()[0], (Pixel{1, 2}));
    EXPECT_EQ(s.distinct().size(), 2u);
}

TEST(Mask, RejectsBadLines) {
    EXPECT_THROW(parse_mask("1 2 3\n", 4), FormatError);
    EXPECT_THROW(parse_mask("1 x\n", 4), FormatError);
    EXPECT_THROW(parse_mask("4 0\n", 4), FormatError);
    EXPECT_THROW(parse_mask("# nothing\n", 4), FormatError);
}

TEST(Mask, RoundTrip) {
    const SampleSet s = sample_uniform(8, 20, RngSeed{3});
    const auto path = temp_path("mask.txt");
    write_mask(path, s);
    EXPECT_EQ(read_mask(path, 8).draws(), s.draws());
}
