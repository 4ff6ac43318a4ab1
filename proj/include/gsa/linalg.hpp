#pragma once

#include <cstddef>
#include <vector>

#include "gsa/kernels.hpp"

namespace gsa::linalg {

using Vec = std::vector<double>;

/// Dense row-major matrix. Row-major keeps the per-row dot products of the
/// hot matvec paths contiguous for the SIMD kernels.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), d_(rows * cols, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return d_.empty(); }

    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }
    const double* row(std::size_t i) const { return d_.data() + i * cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> d_;
};

void matvec(const Mat& a, const Vec& x, Vec& y);
double dot(const Vec& a, const Vec& b);
double weighted_sumsq(const Vec& v, const Vec& w);

/// Rotates n (re, im) pairs starting at v by the given angle.
void rotate_pairs(double* v, std::size_t pairs, double angle);

double max_abs_diff(const Vec& a, const Vec& b);

} // namespace gsa::linalg
