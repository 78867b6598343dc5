#include "bqi/objective.hpp"

#include "bqi/features.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bqi {

void ObjectiveSpec::validate() const {
  if (qubits < 1) throw std::invalid_argument("objective: qubits must be >= 1");
  if (entangler_layers < 0 || decoder_layers < 0) {
    throw std::invalid_argument("objective: layer counts must be >= 0");
  }
  prior.validate();
  target.validate();
  if (!(shots >= 1.0) && !std::isinf(shots)) {
    throw std::invalid_argument("objective: shots must be >= 1 or infinite");
  }
  if (ridge < 0) throw std::invalid_argument("objective: ridge must be >= 0");
  if (quadrature_nodes < 1 || grid_points < 2) {
    throw std::invalid_argument("objective: bad grid sizes");
  }
  if (train_count < 1) {
    throw std::invalid_argument("objective: train_count must be >= 1");
  }
}

ObjectiveGrid objective_grid(const ObjectiveSpec& spec) {
  ObjectiveGrid grid;
  if (spec.evaluation == ObjectiveSpec::Evaluation::quadrature) {
    WeightedGrid wg =
        evaluation_grid(spec.prior, spec.quadrature_nodes, spec.grid_points);
    grid.points = std::move(wg.points);
    grid.weights = std::move(wg.weights);
  } else {
    grid.points = sample_prior(spec.prior, spec.train_count, spec.dataset_seed);
    grid.weights = RVec::Constant(spec.train_count, 1.0 / spec.train_count);
  }
  grid.targets = spec.target(grid.points);
  return grid;
}

LossResult post_reservoir_loss(const SpinAlgebra& alg, const CircuitParams& p,
                               const ObjectiveSpec& spec) {
  spec.validate();
  if (alg.qubits != spec.qubits) {
    throw std::invalid_argument("objective: algebra size mismatch");
  }
  ObjectiveGrid grid = objective_grid(spec);
  FeatureTable table;
  if (spec.evaluation == ObjectiveSpec::Evaluation::sampled_features) {
    const int shots = int(spec.shots);
    if (!(spec.shots >= 1.0) || std::isinf(spec.shots)) {
      throw std::invalid_argument(
          "objective: sampled features need finite shots");
    }
    table = sampled_features(alg, p, grid.points, grid.weights, grid.targets,
                             shots, spec.dataset_seed);
  } else {
    table = exact_features(alg, p, grid.points, grid.weights, grid.targets);
  }
  MomentSet moments = compute_moments(table);
  const double shots_for_penalty =
      spec.evaluation == ObjectiveSpec::Evaluation::sampled_features
          ? std::numeric_limits<double>::infinity()
          : spec.shots;
  LinearReadout readout =
      optimal_weights(moments, shots_for_penalty, spec.ridge);
  LossResult out;
  out.loss = readout.predicted_loss;
  out.weights = std::move(readout.weights);
  return out;
}

Objective make_objective(const SpinAlgebra& alg, const ObjectiveSpec& spec) {
  spec.validate();
  return [&alg, spec](const RVec& packed) {
    CircuitParams p = CircuitParams::from_vector(
        spec.entangler_layers, spec.decoder_layers, packed,
        spec.decoder_half_pi_first);
    return post_reservoir_loss(alg, p, spec).loss;
  };
}

SearchBox default_box(int parameter_count) {
  if (parameter_count < 1) {
    throw std::invalid_argument("default_box: need at least one parameter");
  }
  SearchBox box;
  box.lower = RVec::Zero(parameter_count);
  box.upper = RVec::Constant(parameter_count, 2.0 * M_PI);
  box.periodic.assign(std::size_t(parameter_count), true);
  return box;
}

SearchBox warm_box(const RVec& center, double min_half_width) {
  SearchBox box;
  const Eigen::Index n = center.size();
  box.lower = RVec(n);
  box.upper = RVec(n);
  box.periodic.assign(std::size_t(n), false);
  for (Eigen::Index d = 0; d < n; ++d) {
    const double half =
        std::max(0.5 * std::abs(center[d]), min_half_width);
    box.lower[d] = center[d] - half;
    box.upper[d] = center[d] + half;
  }
  return box;
}

}  // namespace bqi
