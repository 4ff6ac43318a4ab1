#pragma once

#include <cstddef>
#include <string_view>

namespace gsa::kernels {

/// Hot-loop kernels shared by the estimation, probing, and correction paths.
/// Every kernel has a scalar reference implementation; SIMD variants are
/// selected once at startup from CPU features. Set GSA_KERNELS=scalar (or
/// avx2) in the environment to force a table.
struct Ops {
    std::string_view name;

    /// sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// sum_i w[i]*v[i]*v[i]
    double (*weighted_sumsq)(const double* v, const double* w, std::size_t n);

    /// y = A*x for a row-major rows x cols matrix
    void (*matvec)(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y);

    /// In-place rotation of contiguous (re, im) pairs:
    ///   re' = c*re - s*im,  im' = s*re + c*im
    void (*rotate_pairs)(double* v, std::size_t pairs, double c, double s);
};

const Ops& scalar_ops();

/// nullptr when the binary was built without AVX2 support
const Ops* avx2_ops();

bool avx2_supported();

/// The dispatch table in use for this process.
const Ops& active();

} // namespace gsa::kernels
