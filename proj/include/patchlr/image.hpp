#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace patchlr {

/// Zero-indexed pixel coordinate on an N x N grid.
struct Pixel {
    int row = 0;
    int col = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Square grayscale image with real-valued pixels stored row-major.
///
/// Values are unconstrained internally; quantization to [0,255] only happens
/// when writing a PGM file. Every pixel is finite.
class Image {
public:
    Image() = default;
    /// N x N image filled with `value`.
    explicit Image(int side, double value = 0.0);
    /// Takes ownership of `pixels`; requires pixels.size() == side * side and
    /// all values finite.
    Image(int side, std::vector<double> pixels);

    int side() const noexcept { return side_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    double& operator()(int row, int col) { return pixels_[index(row, col)]; }
    double operator()(int row, int col) const { return pixels_[index(row, col)]; }
    double& operator[](std::size_t i) { return pixels_[i]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    std::span<double> pixels() noexcept { return pixels_; }
    std::span<const double> pixels() const noexcept { return pixels_; }

    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(side_) +
               static_cast<std::size_t>(col);
    }
    std::size_t index(Pixel p) const noexcept { return index(p.row, p.col); }
    bool contains(Pixel p) const noexcept {
        return p.row >= 0 && p.col >= 0 && p.row < side_ && p.col < side_;
    }

    /// Euclidean norm of the pixel vector.
    double norm() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    int side_ = 0;
    std::vector<double> pixels_;
};

/// Inner product of two images of equal size.
double dot(const Image& a, const Image& b);

/// Seed for every randomized routine. Identical seed and identical call
/// sequence give identical output.
struct RngSeed {
    std::uint64_t value = 0;
};

/// Derives an independent child seed (splitmix64 finalizer), used for
/// per-trial streams.
RngSeed derive_seed(RngSeed parent, std::uint64_t stream);

/// Multiset of i.i.d. pixel draws together with its distinct support.
class SampleSet {
public:
    SampleSet() = default;
    /// Validates every draw against the N x N grid.
    SampleSet(int side, std::vector<Pixel> draws);

    int side() const noexcept { return side_; }
    /// Number of draws m, collisions included.
    std::size_t size() const noexcept { return draws_.size(); }
    const std::vector<Pixel>& draws() const noexcept { return draws_; }
    /// Unique draws in raster order.
    const std::vector<Pixel>& distinct() const noexcept { return distinct_; }
    /// Per-pixel draw count, row-major, length N^2.
    std::vector<int> multiplicity() const;
    /// Per-pixel 0/1 indicator of the distinct support, row-major.
    std::vector<std::uint8_t> indicator() const;

private:
    int side_ = 0;
    std::vector<Pixel> draws_;
    std::vector<Pixel> distinct_;
};

/// m i.i.d. uniform draws on the side x side grid. Collisions are kept.
SampleSet sample_uniform(int side, std::size_t m, RngSeed seed);

/// Every pixel exactly once in raster order (deterministic full design).
SampleSet full_design(int side);

/// z on the distinct support of `samples`, zero elsewhere.
Image apply_mask(const Image& z, const SampleSet& samples);

struct PsnrResult {
    double db = 0.0;
    /// RMSE was exactly zero; `db` then holds +infinity.
    bool identical = false;
};

/// 20 log10(255 / RMSE) with the peak fixed at 255.
PsnrResult psnr(const Image& reference, const Image& test);

/// Formats a PSNR result for reports ("identical" or "%.2f").
std::string format_psnr(const PsnrResult& r);

} // namespace patchlr
