#pragma once

#include "bqi/spin.hpp"

#include <cstdint>

namespace bqi {

/// Measurement features for a set of phase values: one row per input holding
/// the outcome distribution (exact mode) or empirical shot frequencies
/// (sampled mode). Row weights form a discrete probability measure.
struct FeatureTable {
  enum class Mode { exact, sampled };

  Mode mode = Mode::exact;
  double shots = 0.0;  // sampled mode only
  std::uint64_t seed = 0;
  RMat rows;     // N x K
  RVec weights;  // N, sums to one
  RVec targets;  // N

  Eigen::Index size() const { return rows.rows(); }
  int feature_dim() const { return static_cast<int>(rows.cols()); }
};

/// Exact outcome probabilities for every input; rows are filled in parallel
/// and depend only on the row index.
FeatureTable exact_features(const SpinAlgebra& alg, const CircuitParams& p,
                            const RVec& inputs, const RVec& weights,
                            const RVec& targets);

/// S-shot empirical frequencies with one derived RNG substream per row.
FeatureTable sampled_features(const SpinAlgebra& alg, const CircuitParams& p,
                              const RVec& inputs, const RVec& weights,
                              const RVec& targets, std::int64_t shots,
                              std::uint64_t seed);

}  // namespace bqi
