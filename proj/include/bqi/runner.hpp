#pragma once

#include "bqi/config.hpp"
#include "bqi/direct_opt.hpp"
#include "bqi/objective.hpp"
#include "bqi/readout.hpp"

#include <string>

namespace bqi {

inline constexpr const char* kToolName = "bqi";
inline constexpr const char* kToolVersion = "1.0.0";

ObjectiveSpec objective_from_config(const ExperimentConfig& config);
OptimizerOptions optimizer_from_config(const ExperimentConfig& config,
                                       std::uint64_t seed, int budget);

struct TrainResult {
  CircuitParams circuit;
  LinearReadout readout;
  MomentSet moments;
  OptimizerTrace trace;  // merged across stages; empty without a search
  bool trained = false;  // false when the circuit came from the config
};

/// Circuit search plus closed-form readout. A configured circuit is taken
/// as-is; otherwise a cold scan over one period per angle spends
/// warm_fraction of the budget, refinement rounds trisect boxes spanning
/// 50%..150% of the running best, and the last polish_fraction descends a
/// simplex from the incumbent. Deterministic in the config seed.
TrainResult train_circuit(const SpinAlgebra& alg,
                          const ExperimentConfig& config);

/// Risk of reading the target through an estimate of the phase itself:
/// the readout's phase estimate is pushed through the target function.
/// Exact at one shot (the estimate takes value w_j with probability x_j)
/// and in the infinite-shot limit; Monte Carlo otherwise.
double plugin_mse_point(const SpinAlgebra& alg, const CircuitParams& p,
                        const RVec& weights, const TargetSpec& target,
                        double u, double shots, std::uint64_t seed);
double plugin_bayes_mse(const SpinAlgebra& alg, const CircuitParams& p,
                        const RVec& weights, const PriorSpec& prior,
                        const TargetSpec& target, double shots,
                        int quadrature_nodes, int grid_points,
                        std::uint64_t seed);

/// Locale-independent shortest round-trip decimal form.
std::string format_double(double value);

/// Command drivers. Each writes results.json, manifest.json and its
/// command-specific files under config.out_dir; errors surface as
/// exceptions.
void run_train(const ExperimentConfig& config);
void run_compare(const ExperimentConfig& config);
void run_scaling(const ExperimentConfig& config);
void run_eigentasks(const ExperimentConfig& config);
void run_info(const ExperimentConfig& config);
void run_sample(const ExperimentConfig& config);

}  // namespace bqi
