#include "patchlr/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "patchlr/errors.hpp"

namespace patchlr {
namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Header tokenizer: whitespace-separated tokens with '#' comments to end of line.
class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t pos() const noexcept { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const unsigned char ch = static_cast<unsigned char>(bytes_[pos_]);
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else if (std::isspace(ch)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000)
                throw FormatError(std::string("PGM ") + what + " out of range", start);
            ++pos_;
        }
        if (pos_ == start)
            throw FormatError(std::string("expected PGM ") + what, start);
        return v;
    }

    // Exactly one whitespace byte separates maxval from a binary raster.
    void consume_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw FormatError("expected whitespace after PGM maxval", pos_);
        ++pos_;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

Image parse_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw FormatError("not a P2/P5 PGM file", 0);
    const bool binary = bytes[1] == '5';
    HeaderReader hdr(bytes.substr(2));
    const std::size_t base = 2;
    const long width = hdr.read_uint("width");
    const long height = hdr.read_uint("height");
    const std::size_t after_dims = base + hdr.pos();
    const long maxval = hdr.read_uint("maxval");
    if (width < 1 || height < 1)
        throw FormatError("PGM dimensions must be positive", after_dims);
    if (width != height)
        throw FormatError("PGM image must be square, got " + std::to_string(width) + "x" +
                              std::to_string(height),
                          after_dims);
    if (maxval != 255)
        throw FormatError("unsupported PGM maxval " + std::to_string(maxval) + " (need 255)",
                          base + hdr.pos());

    const int side = static_cast<int>(width);
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> pixels(count);
    if (binary) {
        hdr.consume_single_space();
        const std::size_t start = base + hdr.pos();
        if (bytes.size() - start < count)
            throw FormatError("truncated PGM raster: need " + std::to_string(count) +
                                  " bytes, have " + std::to_string(bytes.size() - start),
                              bytes.size());
        for (std::size_t i = 0; i < count; ++i)
            pixels[i] = static_cast<unsigned char>(bytes[start + i]);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v = 0;
            try {
                v = hdr.read_uint("pixel value");
            } catch (const FormatError&) {
                hdr.skip_space_and_comments();
                throw FormatError("truncated or malformed PGM raster at pixel " + std::to_string(i),
                                  base + hdr.pos());
            }
            if (v > 255)
                throw FormatError("PGM pixel value " + std::to_string(v) + " exceeds maxval",
                                  base + hdr.pos());
            pixels[i] = static_cast<double>(v);
        }
    }
    return Image(side, std::move(pixels));
}

Image read_pgm(const std::filesystem::path& path) { return parse_pgm(slurp(path)); }

void write_pgm(const std::filesystem::path& path, const Image& image, PgmEncoding encoding) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const int n = image.side();
    auto quantize = [](double v) {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0)));
    };
    if (encoding == PgmEncoding::Binary) {
        out << "P5\n" << n << ' ' << n << "\n255\n";
        std::string raster(image.size(), '\0');
        for (std::size_t i = 0; i < image.size(); ++i)
            raster[i] = static_cast<char>(quantize(image[i]));
        out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    } else {
        out << "P2\n" << n << ' ' << n << "\n255\n";
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c)
                out << (c ? " " : "") << quantize(image(r, c));
            out << '\n';
        }
    }
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

SampleSet parse_mask(std::string_view text, int side) {
    std::vector<Pixel> draws;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos)
            line_end = text.size();
        std::string line(text.substr(line_start, line_end - line_start));
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos && line[first] != '#') {
            std::istringstream ls(line);
            long r = -1, c = -1;
            std::string extra;
            if (!(ls >> r >> c) || (ls >> extra))
                throw FormatError("mask line must hold exactly two integers: '" + line + "'",
                                  line_start);
            if (r < 0 || c < 0 || r >= side || c >= side)
                throw FormatError("mask coordinate (" + std::to_string(r) + "," +
                                      std::to_string(c) + ") outside the " + std::to_string(side) +
                                      "x" + std::to_string(side) + " grid",
                                  line_start);
            draws.push_back({static_cast<int>(r), static_cast<int>(c)});
        }
        line_start = line_end + 1;
    }
    if (draws.empty())
        throw FormatError("mask file holds no coordinates", text.size());
    return SampleSet(side, std::move(draws));
}

SampleSet read_mask(const std::filesystem::path& path, int side) {
    return parse_mask(slurp(path), side);
}

void write_mask(const std::filesystem::path& path, const SampleSet& samples) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (const Pixel& p : samples.draws())
        out << p.row << ' ' << p.col << '\n';
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace patchlr
