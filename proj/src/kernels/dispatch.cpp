#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "patchlr/kernels.hpp"

namespace patchlr::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(PATCHLR_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() noexcept {
    if (const char* env = std::getenv("PATCHLR_ISA"); env && std::string(env) == "scalar")
        return Isa::Scalar;
    return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

const KernelTable& active() noexcept { return *table_for(current().load(std::memory_order_relaxed)); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": size mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
}

} // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

bool isa_supported(Isa isa) noexcept {
    return isa == Isa::Scalar || (isa == Isa::Avx2 && cpu_has_avx2());
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (!isa_supported(isa))
        throw std::invalid_argument("instruction set " + std::string(isa_name(isa)) +
                                    " is not available");
    current().store(isa, std::memory_order_relaxed);
}

void reset_isa() noexcept { current().store(detect(), std::memory_order_relaxed); }

const KernelTable* table_for(Isa isa) noexcept {
    switch (isa) {
    case Isa::Scalar:
        return &scalar::table;
    case Isa::Avx2:
#if defined(PATCHLR_HAVE_AVX2)
        return cpu_has_avx2() ? &avx2::table : nullptr;
#else
        return nullptr;
#endif
    }
    return nullptr;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "dot");
    return active().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "squared_distance");
    return active().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_size(x.size(), y.size(), "axpy");
    active().axpy(alpha, x.data(), y.data(), x.size());
}

void laplacian_interior(const double* up, const double* mid, const double* down, double* out,
                        std::size_t count) {
    active().laplacian_interior(up, mid, down, out, count);
}

} // namespace patchlr::kernels
