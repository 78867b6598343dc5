#pragma once

#include "bqi/readout.hpp"

namespace bqi {

/// Solution of the generalized problem noise r = beta^2 gram r on the range
/// of the Gram matrix. Columns of `combinations` are Gram-orthonormal output
/// combinations ordered by ascending noise-to-signal ratio beta^2; the first
/// is the constant task with beta^2 = 0.
struct EigentaskBasis {
  RMat combinations;  // K x rank
  RVec betas2;        // rank, ascending, >= 0
  int rank = 0;
};

EigentaskBasis solve_eigentasks(const MomentSet& m,
                                double cutoff = kPinvCutoff);

/// Expected signal-to-noise S / beta^2 and expected capacity
/// 1 / (1 + beta^2 / S) of one eigentask at shot budget S.
struct EigentaskStat {
  double snr = 0.0;
  double expected_capacity = 0.0;
};
EigentaskStat expected_snr(const EigentaskBasis& basis, int index,
                           double shots);

/// Value r^T x(u) and S-shot standard deviation sqrt(r^T Sigma(u) r / S).
struct EigentaskPoint {
  double mean = 0.0;
  double stddev = 0.0;
};
EigentaskPoint eigentask_value(const SpinAlgebra& alg, const CircuitParams& p,
                               const EigentaskBasis& basis, int index, double u,
                               double shots);

/// Readout restricted to the first `keep` eigentasks (the constant task
/// counts). Returned weights live in the raw feature space.
LinearReadout truncated_readout(const EigentaskBasis& basis, int keep,
                                const MomentSet& m, double shots,
                                double ridge = 0.0);
LinearReadout truncated_readout(const EigentaskBasis& basis, int keep,
                                const FeatureTable& table,
                                double ridge = 1e-10);

}  // namespace bqi
