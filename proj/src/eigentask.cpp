#include "bqi/eigentask.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bqi {

namespace {

void check_index(const EigentaskBasis& basis, int index) {
  if (index < 0 || index >= basis.rank) {
    throw std::invalid_argument("eigentask index out of range");
  }
}

MomentSet project_moments(const EigentaskBasis& basis, int keep,
                          const MomentSet& m) {
  const RMat r = basis.combinations.leftCols(keep);
  MomentSet p;
  p.gram = r.transpose() * m.gram * r;
  p.noise = r.transpose() * m.noise * r;
  p.cross = r.transpose() * m.cross;
  p.target_sq = m.target_sq;
  return p;
}

}  // namespace

EigentaskBasis solve_eigentasks(const MomentSet& m, double cutoff) {
  const Eigen::Index k = m.gram.rows();
  if (k == 0 || m.noise.rows() != k) {
    throw std::invalid_argument("moment matrices must be square and aligned");
  }
  Eigen::SelfAdjointEigenSolver<RMat> eg(m.gram);
  if (eg.info() != Eigen::Success) {
    throw std::runtime_error("Gram eigendecomposition failed");
  }
  const double thresh = cutoff * std::max(eg.eigenvalues().maxCoeff(), 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (eg.eigenvalues()[i] > thresh) ++rank;
  }
  if (rank == 0) throw std::invalid_argument("Gram matrix is numerically zero");

  // Whitening map W = U_+ L_+^{-1/2}; columns span range(gram).
  RMat w(k, rank);
  int at = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (eg.eigenvalues()[i] > thresh) {
      w.col(at++) = eg.eigenvectors().col(i) / std::sqrt(eg.eigenvalues()[i]);
    }
  }
  RMat white = w.transpose() * m.noise * w;
  white = 0.5 * (white + white.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> ew(white);
  if (ew.info() != Eigen::Success) {
    throw std::runtime_error("whitened eigendecomposition failed");
  }

  EigentaskBasis basis;
  basis.rank = rank;
  basis.betas2 = ew.eigenvalues().cwiseMax(0.0);
  basis.combinations = w * ew.eigenvectors();
  // Sign convention: the entry of largest magnitude is positive.
  for (int j = 0; j < rank; ++j) {
    Eigen::Index imax = 0;
    basis.combinations.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis.combinations(imax, j) < 0.0) basis.combinations.col(j) *= -1.0;
  }
  return basis;
}

EigentaskStat expected_snr(const EigentaskBasis& basis, int index,
                           double shots) {
  check_index(basis, index);
  if (!(shots >= 1.0)) throw std::invalid_argument("shot budget must be >= 1");
  const double b2 = basis.betas2[index];
  EigentaskStat s;
  s.snr = b2 > 0.0 ? shots / b2 : std::numeric_limits<double>::infinity();
  s.expected_capacity = 1.0 / (1.0 + b2 / shots);
  return s;
}

EigentaskPoint eigentask_value(const SpinAlgebra& alg, const CircuitParams& p,
                               const EigentaskBasis& basis, int index, double u,
                               double shots) {
  check_index(basis, index);
  if (!(shots >= 1.0)) throw std::invalid_argument("shot budget must be >= 1");
  const RVec x = circuit_probabilities(alg, p, u);
  const RVec r = basis.combinations.col(index);
  EigentaskPoint out;
  out.mean = r.dot(x);
  const double rx = out.mean;
  const double quad = (r.array().square() * x.array()).sum() - rx * rx;
  out.stddev = std::sqrt(std::max(quad, 0.0) / shots);
  return out;
}

LinearReadout truncated_readout(const EigentaskBasis& basis, int keep,
                                const MomentSet& m, double shots,
                                double ridge) {
  if (keep < 1 || keep > basis.rank) {
    throw std::invalid_argument("kept eigentask count out of range");
  }
  LinearReadout r = optimal_weights(project_moments(basis, keep, m), shots, ridge);
  r.weights = basis.combinations.leftCols(keep) * r.weights;
  return r;
}

LinearReadout truncated_readout(const EigentaskBasis& basis, int keep,
                                const FeatureTable& table, double ridge) {
  if (keep < 1 || keep > basis.rank) {
    throw std::invalid_argument("kept eigentask count out of range");
  }
  FeatureTable projected = table;
  projected.rows = table.rows * basis.combinations.leftCols(keep);
  LinearReadout r = empirical_weights(projected, ridge);
  r.weights = basis.combinations.leftCols(keep) * r.weights;
  return r;
}

}  // namespace bqi
