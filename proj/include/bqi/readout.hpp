#pragma once

#include "bqi/dataset.hpp"
#include "bqi/features.hpp"
#include "bqi/prior.hpp"

#include <optional>

namespace bqi {

/// Second-moment summary of a feature distribution under the row measure:
/// gram = E[x x^T], noise = E[diag(x) - x x^T] (single-shot covariance),
/// cross = E[f x], target_sq = E[f^2].
struct MomentSet {
  RMat gram;
  RMat noise;
  RVec cross;
  double target_sq = 0.0;
};

/// Accumulate moments from an exact feature table with pairwise (tree)
/// summation over blocks, so the result is bit-stable regardless of how the
/// rows were produced.
MomentSet compute_moments(const FeatureTable& table);

struct LinearReadout {
  enum class Training { closed_form, empirical };

  RVec weights;
  double shots = 1.0;  // budget the weights were optimized for; may be inf
  double ridge = 0.0;
  double predicted_loss = 0.0;
  Training training = Training::closed_form;
};

/// Loss-minimizing weights at shot budget S:
/// w = pinv(gram + noise / S + ridge I) cross, loss = E[f^2] - cross^T w.
LinearReadout optimal_weights(const MomentSet& m, double shots,
                              double ridge = 0.0);

/// Weighted ridge regression on table rows through a rank-revealing
/// factorization. Exact tables reproduce optimal_weights at S -> inf.
LinearReadout empirical_weights(const FeatureTable& table,
                                double ridge = 1e-10);

double predict(const LinearReadout& readout, const RVec& features);

struct MseParts {
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

/// Exact decomposition (f(u) - w^T x(u))^2 + w^T Sigma(u) w / S.
MseParts pointwise_mse(const SpinAlgebra& alg, const CircuitParams& p,
                       const LinearReadout& readout, const TargetSpec& target,
                       double u, double shots);

struct RiskReport {
  double bmse = 0.0;
  std::optional<double> bmse_db;
  double capacity = 0.0;
  std::optional<double> mse_m;  // prior-information-removed risk, when defined
  double target_second_moment = 0.0;
  double prior_variance = 0.0;
  RVec grid_u, grid_mse, grid_bias_sq, grid_variance;
};

struct RiskOptions {
  int quadrature_nodes = 75;
  int grid_points = 4096;
  int curve_points = 401;
};

/// Prior-averaged risk from the exact pointwise decomposition, never from
/// sampled shots. The display curve spans four standard deviations around
/// the prior mean, clipped to [-pi, pi].
RiskReport bayes_risk(const SpinAlgebra& alg, const CircuitParams& p,
                      const LinearReadout& readout, const PriorSpec& prior,
                      const TargetSpec& target, double shots,
                      const RiskOptions& options = {});

inline std::optional<double> to_decibel(double value) {
  if (value <= 0.0) return std::nullopt;
  return 10.0 * std::log10(value);
}

}  // namespace bqi
