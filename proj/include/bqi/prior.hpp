#pragma once

#include "bqi/linalg.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

namespace bqi {

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sigma = 1.0;
};

/// Distribution of the phase to estimate. Truncated Gaussians are centered
/// at zero and restricted to [-pi, pi].
struct PriorSpec {
  enum class Kind { gaussian, truncated_gaussian, mixture };

  Kind kind = Kind::gaussian;
  double sigma = 1.0;
  std::vector<GaussianComponent> components;

  static PriorSpec gaussian(double sigma);
  static PriorSpec truncated_gaussian(double sigma);
  static PriorSpec mixture(std::vector<GaussianComponent> components);

  void validate() const;
  double mean() const;
  double variance() const;
  double density(double u) const;
  bool bounded() const { return kind == Kind::truncated_gaussian; }
};

RVec sample_prior(const PriorSpec& prior, Eigen::Index n, std::uint64_t seed);

/// Expectation evaluation strategies. Quadrature applies to (mixtures of)
/// untruncated Gaussians; the dense trapezoid grid applies to the bounded
/// truncated prior; Monte Carlo applies everywhere.
struct MonteCarloMethod {
  Eigen::Index samples = 100000;
  std::uint64_t seed = 0;
};
struct QuadratureMethod {
  int nodes = 75;
};
struct GridMethod {
  int points = 4096;
};
using ExpectationMethod =
    std::variant<QuadratureMethod, GridMethod, MonteCarloMethod>;

double expectation(const PriorSpec& prior,
                   const std::function<double(double)>& fn,
                   const ExpectationMethod& method);

/// Discrete measure approximating the prior: points plus weights that sum
/// to one. Gaussians and mixtures map Gauss-Hermite nodes through each
/// component; the truncated prior uses a trapezoid grid on [-pi, pi].
struct WeightedGrid {
  RVec points;
  RVec weights;
};

WeightedGrid evaluation_grid(const PriorSpec& prior, int quadrature_nodes = 75,
                             int grid_points = 4096);

}  // namespace bqi
