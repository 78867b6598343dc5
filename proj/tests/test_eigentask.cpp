#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bqi/eigentask.hpp"
#include "bqi/rng.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace bqi;

namespace {

CircuitParams random_params(int n_en, int n_de, Rng& rng) {
  CircuitParams p;
  p.entangler_layers = n_en;
  p.decoder_layers = n_de;
  p.theta_en = RVec(3 * n_en);
  p.theta_de = RVec(3 * n_de);
  for (int i = 0; i < p.theta_en.size(); ++i) p.theta_en[i] = rng.uniform(0, 2 * M_PI);
  for (int i = 0; i < p.theta_de.size(); ++i) p.theta_de[i] = rng.uniform(0, 2 * M_PI);
  return p;
}

struct Fixture {
  SpinAlgebra alg;
  CircuitParams params;
  FeatureTable table;
  MomentSet moments;
};

Fixture make_fixture(int qubits, std::uint64_t seed, double sigma = 0.8,
                     int nodes = 75) {
  Rng rng(seed);
  Fixture f{build_algebra(qubits), random_params(1, 1, rng), {}, {}};
  WeightedGrid g = evaluation_grid(PriorSpec::gaussian(sigma), nodes, 0);
  f.table = exact_features(f.alg, f.params, g.points, g.weights, g.points);
  f.moments = compute_moments(f.table);
  return f;
}

}  // namespace

TEST_CASE("two outcome problem matches the quadratic formula solution") {
  Fixture f = make_fixture(1, 31);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  REQUIRE(basis.rank == 2);

  // Oracle: det(noise - b^2 gram) = 0 solved directly.
  const RMat& g = f.moments.gram;
  const RMat& v = f.moments.noise;
  const double a2 = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  const double a1 = -(v(0, 0) * g(1, 1) + v(1, 1) * g(0, 0) -
                      v(0, 1) * g(1, 0) - v(1, 0) * g(0, 1));
  const double a0 = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
  const double disc = std::sqrt(a1 * a1 - 4 * a2 * a0);
  const double root_lo = (-a1 - disc) / (2 * a2);
  const double root_hi = (-a1 + disc) / (2 * a2);
  CHECK(basis.betas2[0] == doctest::Approx(std::max(root_lo, 0.0)).epsilon(1e-10));
  CHECK(basis.betas2[1] == doctest::Approx(root_hi).epsilon(1e-10));
}

TEST_CASE("basis is gram orthonormal and diagonalizes the noise") {
  Fixture f = make_fixture(6, 7);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  const RMat& r = basis.combinations;
  RMat gram_r = r.transpose() * f.moments.gram * r;
  CHECK((gram_r - RMat::Identity(basis.rank, basis.rank)).cwiseAbs().maxCoeff() <
        1e-9);
  RMat noise_r = r.transpose() * f.moments.noise * r;
  RMat expect = basis.betas2.asDiagonal();
  CHECK((noise_r - expect).cwiseAbs().maxCoeff() < 1e-9);
  for (int j = 1; j < basis.rank; ++j) {
    CHECK(basis.betas2[j] >= basis.betas2[j - 1] - 1e-14);
  }
  CHECK(basis.betas2.minCoeff() >= 0.0);
}

TEST_CASE("first eigentask is the constant function") {
  Fixture f = make_fixture(5, 13);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  CHECK(basis.betas2[0] < 1e-10);
  for (Eigen::Index n = 0; n < f.table.size(); n += 7) {
    const double y =
        basis.combinations.col(0).dot(f.table.rows.row(n).transpose());
    CHECK(y == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("prior averaged noise of an eigentask equals its beta squared") {
  Fixture f = make_fixture(4, 19);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  for (int j : {0, 1, basis.rank - 1}) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < f.table.size(); ++n) {
      EigentaskPoint pt = eigentask_value(f.alg, f.params, basis, j,
                                          f.table.targets[n], 1.0);
      acc += f.table.weights[n] * pt.stddev * pt.stddev;
    }
    CHECK(acc == doctest::Approx(basis.betas2[j]).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("snr and expected capacity follow the closed forms") {
  Fixture f = make_fixture(4, 3);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  const int j = basis.rank - 1;
  const double b2 = basis.betas2[j];
  EigentaskStat s1 = expected_snr(basis, j, 1.0);
  EigentaskStat s100 = expected_snr(basis, j, 100.0);
  CHECK(s1.snr == doctest::Approx(1.0 / b2));
  CHECK(s100.snr == doctest::Approx(100.0 / b2));
  CHECK(s1.expected_capacity == doctest::Approx(1.0 / (1.0 + b2)));
  CHECK(s100.expected_capacity ==
        doctest::Approx(1.0 / (1.0 + b2 / 100.0)));
  CHECK(expected_snr(basis, 0, 1.0).expected_capacity ==
        doctest::Approx(1.0));
}

TEST_CASE("keeping every eigentask reproduces the full readout") {
  Fixture f = make_fixture(6, 23);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  LinearReadout full = optimal_weights(f.moments, 1.0);
  LinearReadout trunc = truncated_readout(basis, basis.rank, f.moments, 1.0);
  CHECK(trunc.predicted_loss ==
        doctest::Approx(full.predicted_loss).epsilon(1e-10));
  RVec probe = f.table.rows.row(11).transpose();
  CHECK(predict(trunc, probe) == doctest::Approx(predict(full, probe)).epsilon(1e-7));
}

TEST_CASE("loss decreases monotonically in the kept eigentask count") {
  Fixture f = make_fixture(6, 29);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  double prev = std::numeric_limits<double>::max();
  for (int keep = 1; keep <= basis.rank; ++keep) {
    LinearReadout r = truncated_readout(basis, keep, f.moments, 1.0);
    CHECK(r.predicted_loss <= prev + 1e-12);
    prev = r.predicted_loss;
  }
}

TEST_CASE("table and moment truncation routes agree on exact features") {
  Fixture f = make_fixture(5, 37);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  const int keep = 3;
  LinearReadout from_moments =
      truncated_readout(basis, keep, f.moments, std::numeric_limits<double>::infinity());
  LinearReadout from_table = truncated_readout(basis, keep, f.table, 1e-12);
  CHECK(from_table.predicted_loss ==
        doctest::Approx(from_moments.predicted_loss).epsilon(1e-6));
}

TEST_CASE("out of range requests are rejected") {
  Fixture f = make_fixture(3, 41);
  EigentaskBasis basis = solve_eigentasks(f.moments);
  CHECK_THROWS_AS(truncated_readout(basis, 0, f.moments, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncated_readout(basis, basis.rank + 1, f.moments, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_snr(basis, -1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(expected_snr(basis, basis.rank, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      eigentask_value(f.alg, f.params, basis, 0, 0.0, 0.0),
      std::invalid_argument);
}
