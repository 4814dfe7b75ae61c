#include "patchlr/kernels.hpp"

namespace patchlr::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

void laplacian_interior(const double* up, const double* mid, const double* down, double* out,
                        std::size_t count) {
    for (std::size_t j = 0; j < count; ++j)
        out[j] = 4.0 * mid[j] - up[j] - down[j] - mid[j - 1] - mid[j + 1];
}

} // namespace

const KernelTable table{&dot, &squared_distance, &axpy, &laplacian_interior};

} // namespace patchlr::kernels::scalar
