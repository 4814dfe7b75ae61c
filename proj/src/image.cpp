#include "patchlr/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "patchlr/kernels.hpp"

namespace patchlr {

Image::Image(int side, double value) : side_(side) {
    if (side < 1)
        throw std::invalid_argument("image side must be positive");
    if (!std::isfinite(value))
        throw std::invalid_argument("image fill value must be finite");
    pixels_.assign(static_cast<std::size_t>(side) * side, value);
}

Image::Image(int side, std::vector<double> pixels) : side_(side), pixels_(std::move(pixels)) {
    if (side < 1)
        throw std::invalid_argument("image side must be positive");
    if (pixels_.size() != static_cast<std::size_t>(side) * side)
        throw std::invalid_argument("pixel count " + std::to_string(pixels_.size()) +
                                    " does not match side " + std::to_string(side));
    for (double v : pixels_)
        if (!std::isfinite(v))
            throw std::invalid_argument("image contains a non-finite pixel");
}

double Image::norm() const { return std::sqrt(kernels::dot(pixels_, pixels_)); }

double dot(const Image& a, const Image& b) {
    if (a.side() != b.side())
        throw std::invalid_argument("dot: image sizes differ");
    return kernels::dot(a.pixels(), b.pixels());
}

RngSeed derive_seed(RngSeed parent, std::uint64_t stream) {
    std::uint64_t x = parent.value + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return {x ^ (x >> 31)};
}

SampleSet::SampleSet(int side, std::vector<Pixel> draws) : side_(side), draws_(std::move(draws)) {
    if (side < 1)
        throw std::invalid_argument("sample grid side must be positive");
    for (const Pixel& p : draws_)
        if (p.row < 0 || p.col < 0 || p.row >= side || p.col >= side)
            throw std::invalid_argument("sample (" + std::to_string(p.row) + "," +
                                        std::to_string(p.col) + ") lies outside the " +
                                        std::to_string(side) + "x" + std::to_string(side) +
                                        " grid");
    distinct_ = draws_;
    std::sort(distinct_.begin(), distinct_.end());
    distinct_.erase(std::unique(distinct_.begin(), distinct_.end()), distinct_.end());
}

std::vector<int> SampleSet::multiplicity() const {
    std::vector<int> counts(static_cast<std::size_t>(side_) * side_, 0);
    for (const Pixel& p : draws_)
        ++counts[static_cast<std::size_t>(p.row) * side_ + p.col];
    return counts;
}

std::vector<std::uint8_t> SampleSet::indicator() const {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(side_) * side_, 0);
    for (const Pixel& p : distinct_)
        mask[static_cast<std::size_t>(p.row) * side_ + p.col] = 1;
    return mask;
}

SampleSet sample_uniform(int side, std::size_t m, RngSeed seed) {
    if (side < 1)
        throw std::invalid_argument("sample_uniform: side must be positive");
    if (m == 0)
        throw std::invalid_argument("sample_uniform: m must be at least 1");
    std::mt19937_64 rng(seed.value);
    std::uniform_int_distribution<int> coord(0, side - 1);
    std::vector<Pixel> draws;
    draws.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int r = coord(rng);
        const int c = coord(rng);
        draws.push_back({r, c});
    }
    return SampleSet(side, std::move(draws));
}

SampleSet full_design(int side) {
    std::vector<Pixel> draws;
    draws.reserve(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            draws.push_back({r, c});
    return SampleSet(side, std::move(draws));
}

Image apply_mask(const Image& z, const SampleSet& samples) {
    if (samples.side() != z.side())
        throw std::invalid_argument("apply_mask: sample grid does not match image");
    Image out(z.side(), 0.0);
    for (const Pixel& p : samples.distinct())
        out(p.row, p.col) = z(p.row, p.col);
    return out;
}

PsnrResult psnr(const Image& reference, const Image& test) {
    if (reference.side() != test.side())
        throw std::invalid_argument("psnr: image dimensions differ (" +
                                    std::to_string(reference.side()) + " vs " +
                                    std::to_string(test.side()) + ")");
    const double sq = kernels::squared_distance(reference.pixels(), test.pixels());
    if (sq == 0.0)
        return {std::numeric_limits<double>::infinity(), true};
    const double rmse = std::sqrt(sq / static_cast<double>(reference.size()));
    return {20.0 * std::log10(255.0 / rmse), false};
}

std::string format_psnr(const PsnrResult& r) {
    if (r.identical)
        return "identical";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r.db);
    return buf;
}

} // namespace patchlr
