#pragma once

// Data-parallel inner loops with a portable scalar reference and an AVX2/FMA
// variant chosen at runtime from CPUID. The scalar path is the specification;
// the vector path must agree with it to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace patchlr::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
/// Instruction set used by the dispatched entry points below.
Isa active_isa() noexcept;
/// Pins dispatch to `isa`. Throws std::invalid_argument if the CPU or the build
/// lacks it. Not thread-safe with respect to concurrent kernel calls.
void force_isa(Isa isa);
/// Restores CPUID-based selection. PATCHLR_ISA=scalar in the environment
/// forces the scalar path at startup.
void reset_isa() noexcept;

/// Sum of a[i] * b[i]. Sizes must match.
double dot(std::span<const double> a, std::span<const double> b);
/// Sum of (a[i] - b[i])^2. Sizes must match.
double squared_distance(std::span<const double> a, std::span<const double> b);
/// y += alpha * x.
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// out[j] = 4 mid[j] - up[j] - down[j] - mid[j-1] - mid[j+1] for j in [0, count).
/// `mid` must be readable at index -1 and `count`.
void laplacian_interior(const double* up, const double* mid, const double* down, double* out,
                        std::size_t count);

/// Function table for one instruction set; used by the equivalence tests.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*squared_distance)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*laplacian_interior)(const double*, const double*, const double*, double*,
                               std::size_t);
};

/// Table for `isa`, or nullptr if not compiled in / not supported by the CPU.
const KernelTable* table_for(Isa isa) noexcept;

namespace scalar {
extern const KernelTable table;
}
#if defined(PATCHLR_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif

} // namespace patchlr::kernels
