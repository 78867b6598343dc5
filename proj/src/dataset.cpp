#include "bqi/dataset.hpp"

#include "bqi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bqi {

TargetSpec TargetSpec::identity() { return TargetSpec{}; }

TargetSpec TargetSpec::sine(double frequency) {
  TargetSpec t;
  t.kind = Kind::sine;
  t.frequency = frequency;
  t.validate();
  return t;
}

TargetSpec TargetSpec::tabulated(RVec u, RVec f) {
  TargetSpec t;
  t.kind = Kind::tabulated;
  t.table_u = std::move(u);
  t.table_f = std::move(f);
  t.validate();
  return t;
}

void TargetSpec::validate() const {
  switch (kind) {
    case Kind::identity:
      return;
    case Kind::sine:
      if (!std::isfinite(frequency)) {
        throw std::invalid_argument("sine frequency must be finite");
      }
      return;
    case Kind::tabulated:
      if (table_u.size() < 2 || table_u.size() != table_f.size()) {
        throw std::invalid_argument("tabulated target needs matching u/f arrays");
      }
      for (Eigen::Index i = 1; i < table_u.size(); ++i) {
        if (!(table_u[i] > table_u[i - 1])) {
          throw std::invalid_argument("tabulated abscissae must increase");
        }
      }
      return;
  }
  throw std::invalid_argument("unknown target kind");
}

double TargetSpec::operator()(double u) const {
  switch (kind) {
    case Kind::identity:
      return u;
    case Kind::sine:
      return std::sin(frequency * u);
    case Kind::tabulated: {
      if (u <= table_u[0]) return table_f[0];
      const Eigen::Index n = table_u.size();
      if (u >= table_u[n - 1]) return table_f[n - 1];
      const double* begin = table_u.data();
      const Eigen::Index hi = std::upper_bound(begin, begin + n, u) - begin;
      const double t =
          (u - table_u[hi - 1]) / (table_u[hi] - table_u[hi - 1]);
      return table_f[hi - 1] + t * (table_f[hi] - table_f[hi - 1]);
    }
  }
  return 0.0;
}

RVec TargetSpec::operator()(const RVec& u) const {
  RVec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = (*this)(u[i]);
  return out;
}

Dataset make_dataset(const PriorSpec& prior, const TargetSpec& target,
                     Eigen::Index n_train, Eigen::Index n_test,
                     std::uint64_t seed) {
  target.validate();
  if (n_train < 1 || n_test < 0) {
    throw std::invalid_argument("dataset sizes must be positive");
  }
  Dataset d;
  d.seed = seed;
  d.inputs = sample_prior(prior, n_train + n_test, substream_seed(seed, 0));
  d.targets = target(d.inputs);

  std::vector<Eigen::Index> order(n_train + n_test);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(substream_seed(seed, 1));
  for (Eigen::Index i = order.size() - 1; i > 0; --i) {
    const Eigen::Index j =
        static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  d.train_index.assign(order.begin(), order.begin() + n_train);
  d.test_index.assign(order.begin() + n_train, order.end());
  return d;
}

}  // namespace bqi
