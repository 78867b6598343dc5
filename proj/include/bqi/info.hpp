#pragma once

#include "bqi/prior.hpp"
#include "bqi/spin.hpp"

#include <optional>
#include <vector>

namespace bqi {

/// Local information content of the outcome distribution at a probe phase.
/// Outcomes with probability below `drop_threshold` are skipped; the result
/// flags when a skipped outcome still carried slope above `slope_warning`.
struct InfoResult {
  double value = 0.0;
  int dropped = 0;
  bool dropped_significant = false;
};

inline constexpr double kInfoDropThreshold = 1e-12;
inline constexpr double kInfoSlopeWarning = 1e-6;

/// sum_j x'_j(u0)^2 / x_j(u0)
InfoResult fisher_information(const SpinAlgebra& alg, const CircuitParams& p,
                              double u0);

/// sum_j [ x'_j x'''_j / x_j - x'_j^2 x''_j / (2 x_j^2) ] at u0
InfoResult bhattacharyya_information(const SpinAlgebra& alg,
                                     const CircuitParams& p, double u0);

struct ExpansionRow {
  double sigma = 0.0;
  double exact_loss = 0.0;
  double expansion = 0.0;  // sigma^2 - sigma^4 I1 - sigma^6 I2
  double residual = 0.0;
};

struct ExpansionReport {
  double fisher = 0.0;
  double bhattacharyya = 0.0;
  std::vector<ExpansionRow> rows;
  /// log-log slope of |residual| against sigma over the three smallest
  /// widths; close to 8 when the expansion captures the loss.
  double fitted_exponent = 0.0;
  double fitted_scale = 0.0;
};

/// Compare the single-shot identity-target loss under gaussian(sigma)
/// against the small-width information expansion around u = 0.
ExpansionReport verify_expansion(const SpinAlgebra& alg,
                                 const CircuitParams& p, const RVec& sigmas,
                                 int quadrature_nodes = 75);

/// Standard and Heisenberg limits 1/L and 1/L^2 per qubit count, plus the
/// optimal-interrogation reference risk where one is tabulated for the
/// prior at hand.
struct ReferenceRow {
  int qubits = 0;
  double sql = 0.0;
  double hl = 0.0;
  std::optional<double> oqi;
};

std::vector<ReferenceRow> reference_curves(const std::vector<int>& qubit_counts,
                                           const PriorSpec& prior);

}  // namespace bqi
