#pragma once

#include "bqi/prior.hpp"

#include <cstdint>
#include <vector>

namespace bqi {

/// Function of the phase that the readout is trained to estimate.
struct TargetSpec {
  enum class Kind { identity, sine, tabulated };

  Kind kind = Kind::identity;
  double frequency = 1.0;  // sine: f(u) = sin(frequency * u)
  RVec table_u, table_f;   // tabulated: linear interpolation, sorted in u

  static TargetSpec identity();
  static TargetSpec sine(double frequency);
  static TargetSpec tabulated(RVec u, RVec f);

  void validate() const;
  double operator()(double u) const;
  RVec operator()(const RVec& u) const;
};

struct Dataset {
  RVec inputs;
  RVec targets;
  std::vector<Eigen::Index> train_index;
  std::vector<Eigen::Index> test_index;
  std::uint64_t seed = 0;
};

/// Draw n_train + n_test inputs from the prior, evaluate the target and
/// split at random. Deterministic in the seed.
Dataset make_dataset(const PriorSpec& prior, const TargetSpec& target,
                     Eigen::Index n_train, Eigen::Index n_test,
                     std::uint64_t seed);

}  // namespace bqi
