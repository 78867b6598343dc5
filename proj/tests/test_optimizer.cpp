#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bqi/cumulant.hpp"
#include "bqi/direct_opt.hpp"
#include "bqi/features.hpp"
#include "bqi/objective.hpp"
#include "bqi/param_shift.hpp"
#include "bqi/readout.hpp"
#include "bqi/rng.hpp"
#include "bqi/surrogate.hpp"
#include "bqi/threads.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>

using namespace bqi;

namespace {

bool traces_equal(const OptimizerTrace& a, const OptimizerTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].evaluation != b.rows[i].evaluation) return false;
    if (a.rows[i].value != b.rows[i].value) return false;
    if (a.rows[i].best != b.rows[i].best) return false;
    if ((a.rows[i].point - b.rows[i].point).cwiseAbs().maxCoeff() != 0.0) {
      return false;
    }
  }
  return a.best_value == b.best_value;
}

// Dense-grid reference minimum of a 2-D function over a box.
double grid_minimum(const std::function<double(double, double)>& f,
                    double lo, double hi, int n) {
  double best = std::numeric_limits<double>::max();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double x = lo + (hi - lo) * i / n;
      const double y = lo + (hi - lo) * j / n;
      best = std::min(best, f(x, y));
    }
  }
  return best;
}

double trig2d(double x, double y) {
  return 1.3 * std::cos(x) + 0.8 * std::sin(y) +
         0.45 * std::cos(x + 2.0 * y) + 0.2 * std::sin(2.0 * x - y);
}

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

}  // namespace

TEST_CASE("shift rule is exact on two-eigenvalue generators") {
  for (double r : {0.5, 1.0, 1.7}) {
    auto g = [r](double t) { return 0.7 * std::cos(2 * r * t) - 0.4 * std::sin(2 * r * t); };
    auto dg = [r](double t) {
      return -1.4 * r * std::sin(2 * r * t) - 0.8 * r * std::cos(2 * r * t);
    };
    for (double theta : {-1.3, 0.0, 0.4, 2.9}) {
      CHECK(parameter_shift(g, theta, r) ==
            doctest::Approx(dg(theta)).epsilon(1e-12));
    }
  }
  CHECK(parameter_shift([](double) { return 3.25; }, 0.7, 0.5) ==
        doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("shift rule agrees with finite differences on a qubit observable") {
  // p(up) after R_x(theta) on a single qubit: generator spectrum +-1/2.
  SpinAlgebra alg = build_algebra(1);
  auto g = [&](double theta) {
    DickeState s = ground_state(alg);
    apply_rotation(alg, s, Axis::x, theta);
    return outcome_probabilities(s)[1];
  };
  for (double theta : {0.3, 1.1, -2.0}) {
    const double exact = parameter_shift(g, theta, 0.5);
    const double fd = (g(theta + 1e-5) - g(theta - 1e-5)) / 2e-5;
    CHECK(std::abs(exact - fd) < 1e-6);
  }
}

TEST_CASE("band-limited landscapes are recovered by the trig fit") {
  Rng rng(11);
  const int degree = 5;
  TrigPoly truth;
  truth.degree = degree;
  truth.cosine = RVec(degree + 1);
  truth.sine = RVec(degree);
  for (int m = 0; m <= degree; ++m) truth.cosine[m] = rng.normal();
  for (int m = 0; m < degree; ++m) truth.sine[m] = rng.normal();

  TrigPoly fitted = trig_interpolate([&](double t) { return truth(t); }, degree);
  double worst = 0.0;
  double worst_d = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double t = rng.uniform(0, 2 * M_PI);
    worst = std::max(worst, std::abs(fitted(t) - truth(t)));
    worst_d = std::max(worst_d, std::abs(fitted.derivative(t) -
                                         truth.derivative(t)));
  }
  CHECK(worst < 1e-3);
  CHECK(worst_d < 1e-3);
}

TEST_CASE("trig fit rejects underdetermined sample sets") {
  RVec angles = RVec::LinSpaced(6, 0.0, 5.0);
  RVec values = angles.array().cos();
  CHECK_THROWS_AS(fit_trig_poly(angles, values, 3), std::invalid_argument);
  CHECK_THROWS_AS(fit_trig_poly(angles, values, -1), std::invalid_argument);
}

TEST_CASE("surrogate interpolates and shrinks variance at data") {
  Rng rng(21);
  const int n = 30;
  RMat pts(n, 2);
  RVec vals(n);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform(0, 2 * M_PI);
    pts(i, 1) = rng.uniform(0, 2 * M_PI);
    vals[i] = trig2d(pts(i, 0), pts(i, 1));
  }
  TrigKernelParams kp;
  kp.gamma = RVec::Constant(2, 0.6);
  kp.harmonics = 4;
  Surrogate gp(pts, vals, kp);
  gp.optimize_hyperparameters(4, 5);
  CHECK(std::isfinite(gp.log_marginal_likelihood()));

  const auto at_data = gp.predict(pts.row(7).transpose());
  CHECK(std::abs(at_data.mean - vals[7]) <
        3.0 * std::sqrt(gp.params().noise) + 1e-4);

  RVec far(2);
  far << pts(7, 0) + M_PI, pts(7, 1) + M_PI;
  const auto away = gp.predict(far);
  CHECK(at_data.stddev <= away.stddev + 1e-12);
}

TEST_CASE("surrogate recovers band-limited signals from enough samples") {
  // g has harmonics up to 3; 2*3+1 = 7 samples per dimension suffice in 1-D.
  Rng rng(23);
  const int degree = 3;
  RVec a(degree + 1), b(degree);
  for (int m = 0; m <= degree; ++m) a[m] = rng.normal();
  for (int m = 0; m < degree; ++m) b[m] = rng.normal();
  auto g = [&](double t) {
    double acc = a[0];
    for (int m = 1; m <= degree; ++m) {
      acc += a[m] * std::cos(m * t) + b[m - 1] * std::sin(m * t);
    }
    return acc;
  };
  const int n = 2 * degree + 1 + 4;
  RMat pts(n, 1);
  RVec vals(n);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = 2 * M_PI * i / n;
    vals[i] = g(pts(i, 0));
  }
  TrigKernelParams kp;
  kp.gamma = RVec::Constant(1, 0.7);
  kp.harmonics = degree;
  kp.noise = 1e-10;
  Surrogate gp(pts, vals, kp);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst,
                     std::abs(gp.predict(pts.row(i).transpose()).mean - vals[i]));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("one dimensional cosine is minimized quickly") {
  SearchBox box;
  box.lower = RVec::Zero(1);
  box.upper = RVec::Constant(1, 2 * M_PI);
  box.periodic = {true};
  OptimizerOptions opts;
  opts.budget = 60;
  opts.seed = 3;
  auto f = [](const RVec& x) { return std::cos(x[0]); };
  OptimizerTrace trace = direct_optimize(f, box, opts);
  CHECK(std::abs(trace.best_point[0] - M_PI) < 1e-2);
  CHECK(trace.best_value == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("two dimensional trigonometric landscape reaches the grid optimum") {
  const double reference =
      grid_minimum(trig2d, 0.0, 2 * M_PI, 2400);
  SearchBox box;
  box.lower = RVec::Zero(2);
  box.upper = RVec::Constant(2, 2 * M_PI);
  box.periodic = {true, true};
  OptimizerOptions opts;
  opts.budget = 300;
  opts.seed = 9;
  auto f = [](const RVec& x) { return trig2d(x[0], x[1]); };
  OptimizerTrace trace = direct_optimize(f, box, opts);
  CHECK(trace.best_value < reference + 1e-2);

  double prev = std::numeric_limits<double>::max();
  for (const TraceRow& row : trace.rows) {
    CHECK(row.best <= prev + 1e-15);
    CHECK(row.best <= row.value + 1e-15);
    prev = row.best;
  }
  CHECK(trace.rows.size() == std::size_t(trace.evaluations));
  CHECK(trace.evaluations <= opts.budget);
}

TEST_CASE("identical settings give identical traces at any worker count") {
  SearchBox box;
  box.lower = RVec::Zero(2);
  box.upper = RVec::Constant(2, 2 * M_PI);
  box.periodic = {true, true};
  OptimizerOptions opts;
  opts.budget = 160;
  opts.seed = 17;
  auto f = [](const RVec& x) { return trig2d(x[0], x[1]); };

  set_thread_count(1);
  OptimizerTrace one = direct_optimize(f, box, opts);
  set_thread_count(3);
  OptimizerTrace three = direct_optimize(f, box, opts);
  set_thread_count(1);
  OptimizerTrace again = direct_optimize(f, box, opts);
  CHECK(traces_equal(one, three));
  CHECK(traces_equal(one, again));
}

TEST_CASE("subdivision stays everywhere dense without the surrogate") {
  SearchBox box;
  box.lower = RVec::Zero(2);
  box.upper = RVec::Constant(2, 2 * M_PI);
  box.periodic = {true, true};
  OptimizerOptions opts;
  opts.budget = 10000;
  opts.seed = 1;
  opts.use_surrogate = false;
  opts.stagnation_epochs = 1 << 30;
  auto f = [](const RVec& x) { return trig2d(x[0], x[1]); };
  OptimizerTrace trace = direct_optimize(f, box, opts);
  CHECK(trace.evaluations >= 9000);
  CHECK(trace.max_diameter < 0.05);
}

TEST_CASE("checkpoints resume to the exact same trajectory") {
  SearchBox box;
  box.lower = RVec::Zero(2);
  box.upper = RVec::Constant(2, 2 * M_PI);
  box.periodic = {true, true};
  OptimizerOptions opts;
  opts.budget = 360;
  opts.seed = 29;
  auto f = [](const RVec& x) { return trig2d(x[0], x[1]); };

  DirectOptimizer full(box, opts);
  full.run(f);

  DirectOptimizer first(box, opts);
  first.run(f, 120);
  CHECK(first.trace().evaluations >= 120);
  CHECK(first.trace().evaluations < 360);
  const std::string path = "/tmp/bqi_checkpoint_test.json";
  first.save_checkpoint(path);
  DirectOptimizer second = DirectOptimizer::load_checkpoint(path);
  second.run(f);
  std::remove(path.c_str());

  CHECK(traces_equal(full.trace(), second.trace()));
}

TEST_CASE("objective loss is bounded by the target second moment") {
  Rng rng(31);
  ObjectiveSpec spec;
  spec.qubits = 3;
  spec.entangler_layers = 1;
  spec.decoder_layers = 1;
  spec.prior = PriorSpec::gaussian(0.6);
  spec.target = TargetSpec::sine(3.0);
  spec.shots = 1.0;
  SpinAlgebra alg = build_algebra(spec.qubits);

  WeightedGrid grid = evaluation_grid(spec.prior, 75, 0);
  const double second_moment =
      (grid.weights.array() * spec.target(grid.points).array().square()).sum();

  Objective f = make_objective(alg, spec);
  for (int rep = 0; rep < 5; ++rep) {
    RVec packed(spec.parameter_count());
    for (int i = 0; i < packed.size(); ++i) packed[i] = rng.uniform(0, 2 * M_PI);
    const double loss = f(packed);
    CHECK(loss >= -1e-12);
    CHECK(loss <= second_moment + 1e-12);
  }
}

TEST_CASE("constant targets are reproduced with zero loss") {
  Rng rng(33);
  ObjectiveSpec spec;
  spec.qubits = 2;
  spec.entangler_layers = 1;
  spec.decoder_layers = 0;
  spec.prior = PriorSpec::gaussian(0.5);
  RVec us(2), fs(2);
  us << -10.0, 10.0;
  fs << 2.5, 2.5;
  spec.target = TargetSpec::tabulated(us, fs);
  SpinAlgebra alg = build_algebra(spec.qubits);
  CircuitParams p = random_params(1, 0, rng);
  CHECK(post_reservoir_loss(alg, p, spec).loss ==
        doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("quadrature objective matches a monte carlo average") {
  Rng rng(37);
  SpinAlgebra alg = build_algebra(2);
  CircuitParams p = random_params(1, 1, rng);
  ObjectiveSpec spec;
  spec.qubits = 2;
  spec.entangler_layers = 1;
  spec.decoder_layers = 1;
  spec.prior = PriorSpec::gaussian(0.8);
  spec.target = TargetSpec::identity();
  spec.shots = 1.0;

  LossResult quad = post_reservoir_loss(alg, p, spec);
  LinearReadout readout;
  readout.weights = quad.weights;
  readout.shots = spec.shots;

  const int n = 40000;
  RVec samples = sample_prior(spec.prior, n, 4242);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    MseParts parts =
        pointwise_mse(alg, p, readout, spec.target, samples[i], spec.shots);
    const double v = parts.total;
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n;
  const double se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean - quad.loss) < 3.0 * se);
}

TEST_CASE("warm boxes span half to three halves with a floor") {
  RVec center(3);
  center << 2.0, -1.0, 0.01;
  SearchBox box = warm_box(center);
  CHECK(box.lower[0] == doctest::Approx(1.0));
  CHECK(box.upper[0] == doctest::Approx(3.0));
  CHECK(box.lower[1] == doctest::Approx(-1.5));
  CHECK(box.upper[1] == doctest::Approx(-0.5));
  CHECK(box.upper[2] - box.lower[2] == doctest::Approx(0.2));
  box.validate();
}

TEST_CASE("single feature-row perturbations follow the envelope rate") {
  Rng rng(41);
  SpinAlgebra alg = build_algebra(2);
  CircuitParams p = random_params(1, 1, rng);
  const int n = 50;
  RVec inputs(n);
  for (int i = 0; i < n; ++i) inputs[i] = rng.uniform(-1.5, 1.5);
  RVec targets = inputs;

  FeatureTable table = exact_features(alg, p, inputs,
                                      RVec::Constant(n, 1.0 / n), targets);
  auto loss_of = [&](const RMat& rows) {
    const RMat gram = rows.transpose() * rows;
    const RVec rhs = rows.transpose() * targets;
    const RVec w = psd_pinv_solve(gram, rhs);
    return (targets - rows * w).squaredNorm() / n;
  };
  const RMat gram = table.rows.transpose() * table.rows;
  const RVec w = psd_pinv_solve(gram, table.rows.transpose() * targets);
  const RVec residual = targets - table.rows * w;

  for (auto [row, col] : {std::pair{0, 1}, std::pair{17, 0}, std::pair{42, 2}}) {
    const double analytic = -2.0 * residual[row] * w[col] / n;
    const double h = 1e-6;
    RMat plus = table.rows, minus = table.rows;
    plus(row, col) += h;
    minus(row, col) -= h;
    const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
    CHECK(std::abs(fd - analytic) < 1e-6 * std::max(1.0, std::abs(analytic)));
  }
}

TEST_CASE("predicted loss cumulants track the sampled distribution") {
  Rng rng(43);
  SpinAlgebra alg = build_algebra(3);
  CircuitParams p = random_params(1, 1, rng);
  const int n = 120;
  RVec inputs = sample_prior(PriorSpec::gaussian(0.7), n, 77);
  RVec targets = inputs;

  const double shots = 32.0;
  CumulantPrediction pred =
      predict_loss_cumulants(alg, p, inputs, targets, shots);
  LossSample obs =
      sample_loss_distribution(alg, p, inputs, targets, shots, 3000, 99);

  CHECK(pred.mean_shift != 0.0);
  CHECK(obs.mean_shift == doctest::Approx(pred.mean_shift).epsilon(0.25));
  CHECK(obs.variance == doctest::Approx(pred.variance).epsilon(0.25));
}

TEST_CASE("diagnostic sweep reports near inverse-shot scaling") {
  Rng rng(47);
  SpinAlgebra alg = build_algebra(2);
  CircuitParams p = random_params(1, 0, rng);
  DiagnosticOptions opts;
  opts.sample_count = 80;
  opts.repetitions = 400;
  opts.seed = 5;
  DiagnosticReport rep = loss_distribution_diagnostic(
      alg, p, PriorSpec::gaussian(0.6), TargetSpec::identity(),
      {8.0, 32.0, 128.0}, opts);
  REQUIRE(rep.rows.size() == 3);
  CHECK_FALSE(rep.noisy);
  CHECK(rep.mean_shift_slope == doctest::Approx(-1.0).epsilon(0.3));
  CHECK(rep.variance_slope == doctest::Approx(-1.0).epsilon(0.3));
}
