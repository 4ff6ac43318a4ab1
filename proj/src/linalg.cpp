#include "gsa/linalg.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace gsa::linalg {

void matvec(const Mat& a, const Vec& x, Vec& y) {
    assert(x.size() == a.cols());
    y.resize(a.rows());
    kernels::active().matvec(a.data(), a.rows(), a.cols(), x.data(), y.data());
}

double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double weighted_sumsq(const Vec& v, const Vec& w) {
    assert(v.size() == w.size());
    return kernels::active().weighted_sumsq(v.data(), w.data(), v.size());
}

void rotate_pairs(double* v, std::size_t pairs, double angle) {
    kernels::active().rotate_pairs(v, pairs, std::cos(angle), std::sin(angle));
}

double max_abs_diff(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace gsa::linalg
