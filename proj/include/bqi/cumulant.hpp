#pragma once

#include "bqi/dataset.hpp"
#include "bqi/prior.hpp"
#include "bqi/spin.hpp"

#include <cstdint>
#include <vector>

namespace bqi {

/// Analytic first/second cumulants of the minimized empirical loss under
/// S-shot feature noise, expanded to order 1/S around the exact features.
struct CumulantPrediction {
  double exact_loss = 0.0;  // minimized loss on noise-free features
  double mean_shift = 0.0;  // E[L_hat] - exact_loss
  double variance = 0.0;    // Var[L_hat]
};

CumulantPrediction predict_loss_cumulants(const SpinAlgebra& alg,
                                          const CircuitParams& p,
                                          const RVec& inputs,
                                          const RVec& targets, double shots);

/// Monte-Carlo ground truth: R independent S-shot tables, each re-solved
/// for its own optimal weights.
struct LossSample {
  double mean_shift = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  int repetitions = 0;
};

LossSample sample_loss_distribution(const SpinAlgebra& alg,
                                    const CircuitParams& p, const RVec& inputs,
                                    const RVec& targets, double shots,
                                    int repetitions, std::uint64_t seed);

/// One row per shot budget: predictions next to Monte-Carlo estimates.
struct DiagnosticRow {
  double shots = 0.0;
  CumulantPrediction predicted;
  LossSample observed;
};

struct DiagnosticOptions {
  int sample_count = 200;
  int repetitions = 2000;
  std::uint64_t seed = 0;
};

/// Draws inputs from the prior once and sweeps the shot budgets. Emits a
/// warning flag when the repetition count is too low for stable moments.
struct DiagnosticReport {
  std::vector<DiagnosticRow> rows;
  bool noisy = false;  // repetitions < 100
  double mean_shift_slope = 0.0;
  double variance_slope = 0.0;
};

DiagnosticReport loss_distribution_diagnostic(const SpinAlgebra& alg,
                                              const CircuitParams& p,
                                              const PriorSpec& prior,
                                              const TargetSpec& target,
                                              const std::vector<double>& shots,
                                              const DiagnosticOptions& opts);

}  // namespace bqi
