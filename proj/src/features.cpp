#include "bqi/features.hpp"

#include "bqi/rng.hpp"
#include "bqi/threads.hpp"

#include <stdexcept>

namespace bqi {

namespace {

void check_inputs(const RVec& inputs, const RVec& weights, const RVec& targets) {
  if (inputs.size() == 0) throw std::invalid_argument("no inputs given");
  if (weights.size() != inputs.size() || targets.size() != inputs.size()) {
    throw std::invalid_argument("inputs, weights and targets must align");
  }
  if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("row weights must form a distribution");
  }
}

}  // namespace

FeatureTable exact_features(const SpinAlgebra& alg, const CircuitParams& p,
                            const RVec& inputs, const RVec& weights,
                            const RVec& targets) {
  p.validate();
  check_inputs(inputs, weights, targets);
  FeatureTable t;
  t.mode = FeatureTable::Mode::exact;
  t.rows = RMat(inputs.size(), alg.dim);
  t.weights = weights;
  t.targets = targets;
  parallel_for(inputs.size(), [&](std::int64_t i) {
    t.rows.row(i) = circuit_probabilities(alg, p, inputs[i]).transpose();
  });
  return t;
}

FeatureTable sampled_features(const SpinAlgebra& alg, const CircuitParams& p,
                              const RVec& inputs, const RVec& weights,
                              const RVec& targets, std::int64_t shots,
                              std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shot count must be positive");
  p.validate();
  check_inputs(inputs, weights, targets);
  FeatureTable t;
  t.mode = FeatureTable::Mode::sampled;
  t.shots = static_cast<double>(shots);
  t.seed = seed;
  t.rows = RMat(inputs.size(), alg.dim);
  t.weights = weights;
  t.targets = targets;
  parallel_for(inputs.size(), [&](std::int64_t i) {
    const RVec x = circuit_probabilities(alg, p, inputs[i]);
    t.rows.row(i) =
        sample_shots(x, shots, substream_seed(seed, static_cast<std::uint64_t>(i)))
            .transpose();
  });
  return t;
}

}  // namespace bqi
