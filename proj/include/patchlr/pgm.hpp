#pragma once

#include <filesystem>
#include <string_view>

#include "patchlr/image.hpp"

namespace patchlr {

enum class PgmEncoding { Ascii, Binary };

/// Reads a square P2 or P5 PGM with maxval 255. Throws FormatError on a
/// malformed header, truncated payload, non-square image or maxval != 255,
/// and std::runtime_error if the file cannot be opened.
Image read_pgm(const std::filesystem::path& path);
Image parse_pgm(std::string_view bytes);

/// Writes pixels clamped to [0,255] and rounded to the nearest integer.
void write_pgm(const std::filesystem::path& path, const Image& image,
               PgmEncoding encoding = PgmEncoding::Binary);

/// Mask files: one "row col" pair per line, zero-indexed. Blank lines and
/// lines starting with '#' are skipped. Draw order (and multiplicity) is kept.
SampleSet read_mask(const std::filesystem::path& path, int side);
SampleSet parse_mask(std::string_view text, int side);
void write_mask(const std::filesystem::path& path, const SampleSet& samples);

} // namespace patchlr
