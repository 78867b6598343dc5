#pragma once

#include <Eigen/Dense>
#include <complex>

namespace bqi {

using Real = double;
using Complex = std::complex<double>;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Relative cutoff used when pseudo-inverting Gram-type matrices.
inline constexpr double kPinvCutoff = 1e-12;

/// Solve A w = b for symmetric PSD A with spectral pseudo-inverse.
/// Eigenvalues below cutoff * max |eigenvalue| are treated as zero.
RVec psd_pinv_solve(const RMat& a, const RVec& b, double cutoff = kPinvCutoff);

/// Sum values[begin, end) by recursive pairwise halving. The result does not
/// depend on how the values were produced, which keeps reductions bit-stable
/// across thread counts.
double pairwise_sum(const double* values, std::ptrdiff_t n);

/// Least-squares slope of y against x.
double fit_slope(const RVec& x, const RVec& y);

}  // namespace bqi
