#pragma once

#include "bqi/linalg.hpp"

#include <cstdint>

namespace bqi {

/// Product-of-periodic-kernels covariance with period 2pi per dimension.
/// Each factor is a truncated harmonic series sum_{m=0}^{M} gamma^m cos(m d)
/// normalized to 1 at d = 0; gamma controls the effective bandwidth.
struct TrigKernelParams {
  RVec gamma;           // one decay rate per dimension, each in (0, 1)
  double signal = 1.0;  // prior variance of the latent function
  double noise = 1e-8;  // observation noise variance (floor 1e-10)
  int harmonics = 8;    // series truncation M
};

inline constexpr double kNoiseFloor = 1e-10;

/// Single-dimension correlation factor, normalized so corr(0) = 1.
double trig_correlation(double gamma, int harmonics, double delta);

/// Gaussian-process regressor over angles. Targets are standardized
/// internally; predictions are returned on the original scale.
class Surrogate {
 public:
  /// points: one row per observation, columns are angles in radians.
  Surrogate(RMat points, RVec values, TrigKernelParams params);

  /// Maximize the marginal likelihood over (gamma, signal, noise) with
  /// multi-start Nelder-Mead; deterministic for a fixed seed.
  void optimize_hyperparameters(int starts, std::uint64_t seed,
                                int max_iterations = 120);

  double log_marginal_likelihood() const { return lml_; }
  const TrigKernelParams& params() const { return params_; }
  Eigen::Index size() const { return points_.rows(); }

  struct Prediction {
    double mean = 0.0;
    double stddev = 0.0;
  };
  Prediction predict(const RVec& point) const;

 private:
  void factorize();
  double kernel(const RVec& a, const RVec& b) const;

  RMat points_;
  RVec values_;       // raw targets
  RVec scaled_;       // standardized targets
  double shift_ = 0.0;
  double scale_ = 1.0;
  TrigKernelParams params_;
  Eigen::LLT<RMat> chol_;
  RVec alpha_;
  double lml_ = 0.0;
  bool valid_ = false;
};

}  // namespace bqi
