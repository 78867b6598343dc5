#include "bqi/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace bqi {

QuadratureRule gauss_hermite(int n) {
  if (n < 1 || n > 200) {
    throw std::invalid_argument("node count must be in [1, 200]");
  }
  RMat jacobi = RMat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(jacobi);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("Jacobi matrix eigendecomposition failed");
  }
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = RVec(n);
  const double mu0 = std::sqrt(M_PI);  // integral of exp(-x^2)
  for (int i = 0; i < n; ++i) {
    const double q0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * q0 * q0;
  }
  return rule;
}

}  // namespace bqi
