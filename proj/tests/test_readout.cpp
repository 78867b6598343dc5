#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bqi/readout.hpp"
#include "bqi/rng.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using namespace bqi;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

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

FeatureTable quadrature_table(const SpinAlgebra& alg, const CircuitParams& p,
                              const PriorSpec& prior, const TargetSpec& f,
                              int nodes = 75) {
  WeightedGrid g = evaluation_grid(prior, nodes, 4096);
  return exact_features(alg, p, g.points, g.weights, f(g.points));
}

}  // namespace

TEST_CASE("single shot moments collapse to the outcome mean diagonal") {
  Rng rng(2);
  SpinAlgebra alg = build_algebra(6);
  CircuitParams p = random_params(1, 1, rng);
  FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.8),
                                    TargetSpec::identity());
  MomentSet m = compute_moments(t);
  RMat sum = m.gram + m.noise;
  RVec mean_x = RVec::Zero(alg.dim);
  for (Eigen::Index n = 0; n < t.size(); ++n) {
    mean_x += t.weights[n] * t.rows.row(n).transpose();
  }
  CHECK((sum.diagonal() - mean_x).cwiseAbs().maxCoeff() < 1e-14);
  sum.diagonal().setZero();
  CHECK(sum.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("single shot optimum is the conditional mean ratio") {
  Rng rng(8);
  SpinAlgebra alg = build_algebra(5);
  CircuitParams p = random_params(1, 0, rng);
  FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.7981),
                                    TargetSpec::identity());
  MomentSet m = compute_moments(t);
  LinearReadout r = optimal_weights(m, 1.0);
  // v_j = E[u x_j] / E[x_j]
  for (int j = 0; j < alg.dim; ++j) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index n = 0; n < t.size(); ++n) {
      num += t.weights[n] * t.targets[n] * t.rows(n, j);
      den += t.weights[n] * t.rows(n, j);
    }
    if (den > 1e-12) {
      CHECK(r.weights[j] == doctest::Approx(num / den).epsilon(1e-8));
    }
  }
}

TEST_CASE("closed form agrees with an iterative minimizer") {
  Rng rng(21);
  SpinAlgebra alg = build_algebra(4);
  for (double shots : {1.0, 10.0, kInf}) {
    for (int rep = 0; rep < 5; ++rep) {
      CircuitParams p = random_params(1, 1, rng);
      FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.6),
                                        TargetSpec::identity(), 41);
      MomentSet m = compute_moments(t);
      LinearReadout r = optimal_weights(m, shots);
      RMat a = m.gram;
      if (!std::isinf(shots)) a += m.noise / shots;
      RVec w_cg = oracle::conjugate_gradient(a, m.cross);
      const double loss_cg = m.target_sq - m.cross.dot(w_cg);
      CHECK(r.predicted_loss ==
            doctest::Approx(loss_cg).epsilon(1e-10).scale(m.target_sq));
    }
  }
}

TEST_CASE("one hot single shot regression averages per outcome") {
  // 40 samples over 3 outcomes; exact bucket means are the optimum.
  Rng rng(5);
  const int n = 40, k = 3;
  FeatureTable t;
  t.mode = FeatureTable::Mode::sampled;
  t.shots = 1.0;
  t.rows = RMat::Zero(n, k);
  t.weights = RVec::Constant(n, 1.0 / n);
  t.targets = RVec(n);
  RVec bucket_sum = RVec::Zero(k);
  RVec bucket_count = RVec::Zero(k);
  for (int i = 0; i < n; ++i) {
    const int j = static_cast<int>(rng.uniform() * k);
    t.rows(i, j) = 1.0;
    t.targets[i] = rng.uniform(-1, 1);
    bucket_sum[j] += t.targets[i];
    bucket_count[j] += 1.0;
  }
  LinearReadout r = empirical_weights(t, 0.0);
  for (int j = 0; j < k; ++j) {
    if (bucket_count[j] > 0) {
      CHECK(r.weights[j] ==
            doctest::Approx(bucket_sum[j] / bucket_count[j]).epsilon(1e-10));
    } else {
      CHECK(std::abs(r.weights[j]) < 1e-10);
    }
  }
}

TEST_CASE("noiseless empirical regression matches the closed form") {
  Rng rng(33);
  SpinAlgebra alg = build_algebra(4);
  CircuitParams p = random_params(1, 1, rng);
  FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.9),
                                    TargetSpec::sine(2.0), 61);
  LinearReadout emp = empirical_weights(t, 1e-12);
  LinearReadout opt = optimal_weights(compute_moments(t), kInf);
  CHECK(emp.predicted_loss ==
        doctest::Approx(opt.predicted_loss).epsilon(1e-6));
  RVec probe = t.rows.row(7).transpose();
  CHECK(predict(emp, probe) ==
        doctest::Approx(predict(opt, probe)).epsilon(1e-5));
}

TEST_CASE("predicted loss never increases with the shot budget") {
  Rng rng(44);
  SpinAlgebra alg = build_algebra(5);
  CircuitParams p = random_params(1, 1, rng);
  FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.8),
                                    TargetSpec::identity());
  MomentSet m = compute_moments(t);
  double prev = std::numeric_limits<double>::max();
  for (double s : {1.0, 2.0, 4.0, 16.0, 256.0, 65536.0, kInf}) {
    const double loss = optimal_weights(m, s).predicted_loss;
    CHECK(loss <= prev + 1e-15);
    prev = loss;
  }
}

TEST_CASE("pointwise error decomposition matches a sampling experiment") {
  Rng rng(91);
  SpinAlgebra alg = build_algebra(4);
  CircuitParams p = random_params(1, 1, rng);
  FeatureTable t = quadrature_table(alg, p, PriorSpec::gaussian(0.8),
                                    TargetSpec::identity());
  LinearReadout r = optimal_weights(compute_moments(t), 3.0);
  const double u = 0.42;
  MseParts parts = pointwise_mse(alg, p, r, TargetSpec::identity(), u, 3.0);

  const RVec x = circuit_probabilities(alg, p, u);
  const int reps = 100000;
  RVec sq(reps);
  for (int i = 0; i < reps; ++i) {
    RVec f = sample_shots(x, 3, substream_seed(1000, i));
    const double e = u - predict(r, f);
    sq[i] = e * e;
  }
  const double mean = sq.mean();
  const double se = std::sqrt((sq.array() - mean).square().sum() /
                              (double(reps) - 1.0) / double(reps));
  CHECK(std::abs(parts.total - mean) < 3.0 * se);
  CHECK(parts.total == doctest::Approx(parts.bias_sq + parts.variance));
}

TEST_CASE("risk report is consistent with the training loss") {
  Rng rng(7);
  SpinAlgebra alg = build_algebra(6);
  CircuitParams p = random_params(1, 2, rng);
  PriorSpec prior = PriorSpec::gaussian(0.7981);
  FeatureTable t = quadrature_table(alg, p, prior, TargetSpec::identity());
  LinearReadout r = optimal_weights(compute_moments(t), 1.0);
  RiskReport report =
      bayes_risk(alg, p, r, prior, TargetSpec::identity(), 1.0);
  CHECK(report.bmse ==
        doctest::Approx(r.predicted_loss).epsilon(1e-11));
  CHECK(report.capacity == doctest::Approx(1.0 - report.bmse /
                                                     report.target_second_moment));
  CHECK(report.capacity >= 0.0);
  CHECK(report.capacity <= 1.0);
  CHECK(report.bmse_db.has_value());
  CHECK(*report.bmse_db ==
        doctest::Approx(10.0 * std::log10(report.bmse)).epsilon(1e-12));
  // Identity target under this prior: risk below prior variance implies the
  // information-removed risk exists.
  CHECK(report.mse_m.has_value());
  CHECK(*report.mse_m > report.bmse);
  CHECK(report.grid_u.size() == 401);
  CHECK(report.grid_mse.minCoeff() >= 0.0);
}

TEST_CASE("zero target yields zero risk and a null decibel value") {
  Rng rng(3);
  SpinAlgebra alg = build_algebra(3);
  CircuitParams p = random_params(0, 0, rng);
  RVec u(2), f(2);
  u << -1.0, 1.0;
  f << 0.0, 0.0;
  TargetSpec zero = TargetSpec::tabulated(u, f);
  PriorSpec prior = PriorSpec::gaussian(0.5);
  FeatureTable t = quadrature_table(alg, p, prior, zero);
  LinearReadout r = optimal_weights(compute_moments(t), 1.0);
  RiskReport report = bayes_risk(alg, p, r, prior, zero, 1.0);
  CHECK(report.bmse < 1e-20);
  CHECK(!report.bmse_db.has_value());
  CHECK(report.capacity == 0.0);
}

TEST_CASE("invalid shot budgets and sizes are rejected") {
  MomentSet m;
  m.gram = RMat::Identity(2, 2);
  m.noise = RMat::Zero(2, 2);
  m.cross = RVec::Ones(2);
  m.target_sq = 1.0;
  CHECK_THROWS_AS(optimal_weights(m, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(optimal_weights(m, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(optimal_weights(m, 1.0, -0.1), std::invalid_argument);
  LinearReadout r = optimal_weights(m, 1.0);
  CHECK_THROWS_AS(predict(r, RVec::Ones(3)), std::invalid_argument);
}
