#pragma once

#include "bqi/linalg.hpp"

namespace bqi {

/// Nodes and weights of an integration rule. For Gauss-Hermite the weights
/// integrate against exp(-x^2) and sum to sqrt(pi).
struct QuadratureRule {
  RVec nodes;
  RVec weights;
};

/// Physicists' Gauss-Hermite rule of n points (1 <= n <= 200), computed from
/// the symmetric tridiagonal Jacobi matrix of the Hermite recurrence. Exact
/// for polynomials up to degree 2n - 1.
QuadratureRule gauss_hermite(int n);

}  // namespace bqi
