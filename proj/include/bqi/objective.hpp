#pragma once

#include "bqi/dataset.hpp"
#include "bqi/direct_opt.hpp"
#include "bqi/prior.hpp"
#include "bqi/readout.hpp"
#include "bqi/spin.hpp"

#include <cstdint>

namespace bqi {

/// Fully specifies the training objective: circuit family, prior, target,
/// shot budget, and how the prior expectation is evaluated.
struct ObjectiveSpec {
  int qubits = 1;
  int entangler_layers = 0;
  int decoder_layers = 0;
  bool decoder_half_pi_first = false;
  PriorSpec prior = PriorSpec::gaussian(1.0);
  TargetSpec target = TargetSpec::identity();
  double shots = 1.0;
  double ridge = 0.0;

  enum class Evaluation {
    quadrature,        // deterministic weighted grid from the prior
    training_samples,  // exact probabilities on sampled inputs
    sampled_features,  // finite-shot feature tables (stochastic objective)
  };
  Evaluation evaluation = Evaluation::quadrature;
  int quadrature_nodes = 75;
  int grid_points = 4096;
  int train_count = 10000;
  std::uint64_t dataset_seed = 0;

  int parameter_count() const {
    return 3 * (entangler_layers + decoder_layers);
  }
  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  RVec weights;
};

/// Minimum achievable empirical loss at the given circuit parameters:
/// features on the objective grid, then closed-form optimal weights.
LossResult post_reservoir_loss(const SpinAlgebra& alg, const CircuitParams& p,
                               const ObjectiveSpec& spec);

/// The (points, weights, targets) grid the objective averages over.
struct ObjectiveGrid {
  RVec points;
  RVec weights;
  RVec targets;
};
ObjectiveGrid objective_grid(const ObjectiveSpec& spec);

/// Wrap the spec as a plain vector objective for the optimizer; the packed
/// layout matches CircuitParams::to_vector. The algebra is shared and must
/// outlive the returned callable.
Objective make_objective(const SpinAlgebra& alg, const ObjectiveSpec& spec);

/// Cold-start box covering one full period per angle.
SearchBox default_box(int parameter_count);

/// Warm box spanning 50%..150% of a preliminary optimum, with a half-width
/// floor so near-zero angles keep a searchable range.
SearchBox warm_box(const RVec& center, double min_half_width = 0.1);

}  // namespace bqi
