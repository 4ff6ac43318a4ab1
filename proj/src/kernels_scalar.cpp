#include "gsa/kernels.hpp"

namespace gsa::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0;
    std::size_t i = 0;
    for (; i + 1 < n; i += 2) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
    }
    if (i < n) acc0 += a[i] * b[i];
    return acc0 + acc1;
}

double weighted_sumsq_scalar(const double* v, const double* w, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * v[i] * v[i];
    return acc;
}

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_scalar(a + r * cols, x, cols);
    }
}

void rotate_pairs_scalar(double* v, std::size_t pairs, double c, double s) {
    for (std::size_t p = 0; p < pairs; ++p) {
        const double re = v[2 * p];
        const double im = v[2 * p + 1];
        v[2 * p] = c * re - s * im;
        v[2 * p + 1] = s * re + c * im;
    }
}

const Ops kScalarOps{
    "scalar",
    dot_scalar,
    weighted_sumsq_scalar,
    matvec_scalar,
    rotate_pairs_scalar,
};

} // namespace

const Ops& scalar_ops() { return kScalarOps; }

} // namespace gsa::kernels
