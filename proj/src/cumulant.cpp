#include "bqi/cumulant.hpp"

#include "bqi/features.hpp"
#include "bqi/readout.hpp"
#include "bqi/rng.hpp"
#include "bqi/threads.hpp"

#include <cmath>
#include <stdexcept>

namespace bqi {

namespace {

RVec least_squares_weights(const RMat& rows, const RVec& targets) {
  const RMat gram = rows.transpose() * rows;
  const RVec rhs = rows.transpose() * targets;
  return psd_pinv_solve(gram, rhs);
}

}  // namespace

CumulantPrediction predict_loss_cumulants(const SpinAlgebra& alg,
                                          const CircuitParams& p,
                                          const RVec& inputs,
                                          const RVec& targets, double shots) {
  if (!(shots >= 1.0)) {
    throw std::invalid_argument("cumulants: shots must be >= 1");
  }
  const Eigen::Index n = inputs.size();
  if (n < 2 || targets.size() != n) {
    throw std::invalid_argument("cumulants: bad input sizes");
  }
  const RVec ones = RVec::Ones(n);
  FeatureTable table =
      exact_features(alg, p, inputs, ones / double(n), targets);
  const RMat& x = table.rows;
  const int k = table.feature_dim();

  const RVec w = least_squares_weights(x, targets);
  const RVec residual = targets - x * w;

  CumulantPrediction out;
  out.exact_loss = residual.squaredNorm() / double(n);

  // H = sum_n d2L/dw dw = 2 X^T X; per-sample K_{kj} = 2 x_k w_j - 2 e delta.
  const RMat h = 2.0 * (x.transpose() * x);
  Eigen::SelfAdjointEigenSolver<RMat> es(h);
  const RVec evals = es.eigenvalues();
  const double thresh = kPinvCutoff * evals.cwiseAbs().maxCoeff();
  RVec inv_evals(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    inv_evals[i] = evals[i] > thresh ? 1.0 / evals[i] : 0.0;
  }
  const RMat h_pinv =
      es.eigenvectors() * inv_evals.asDiagonal() * es.eigenvectors().transpose();

  double mean_acc = 0.0;
  double var_acc = 0.0;
  const RMat ww = 2.0 * w * w.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const RVec xi = x.row(i).transpose();
    RMat sigma = RMat(xi.asDiagonal()) - xi * xi.transpose();
    RMat kin = 2.0 * xi * w.transpose();
    kin.diagonal().array() -= 2.0 * residual[i];
    const RMat second = (ww - kin.transpose() * h_pinv * kin) / double(n);
    mean_acc += (second * sigma).trace();
    var_acc += residual[i] * residual[i] * w.dot(sigma * w);
  }
  out.mean_shift = mean_acc / (2.0 * shots);
  out.variance = 4.0 * var_acc / (shots * double(n) * double(n));
  return out;
}

LossSample sample_loss_distribution(const SpinAlgebra& alg,
                                    const CircuitParams& p, const RVec& inputs,
                                    const RVec& targets, double shots,
                                    int repetitions, std::uint64_t seed) {
  if (repetitions < 2) {
    throw std::invalid_argument("cumulants: need at least 2 repetitions");
  }
  const Eigen::Index n = inputs.size();
  const RVec weights = RVec::Constant(n, 1.0 / double(n));
  FeatureTable exact = exact_features(alg, p, inputs, weights, targets);
  const RVec w0 = least_squares_weights(exact.rows, targets);
  const double exact_loss = (targets - exact.rows * w0).squaredNorm() / n;

  // One loss per repetition; each repetition owns an RNG substream so the
  // result is independent of scheduling.
  std::vector<double> losses(static_cast<std::size_t>(repetitions));
  const auto shot_count = std::int64_t(shots);
  parallel_for(std::size_t(repetitions), [&](std::size_t r) {
    FeatureTable noisy = sampled_features(alg, p, inputs, weights, targets,
                                          shot_count,
                                          substream_seed(seed, r));
    const RVec w = least_squares_weights(noisy.rows, targets);
    losses[r] = (targets - noisy.rows * w).squaredNorm() / n;
  });

  RVec loss_vec(repetitions);
  for (int r = 0; r < repetitions; ++r) loss_vec[r] = losses[std::size_t(r)];
  const double mean = loss_vec.mean();
  const RVec centered = loss_vec.array() - mean;
  const double m2 = centered.array().square().mean();
  const double m3 = centered.array().cube().mean();

  LossSample out;
  out.repetitions = repetitions;
  out.mean_shift = mean - exact_loss;
  out.variance = m2 * repetitions / double(repetitions - 1);
  out.skewness = m3 / std::pow(std::max(m2, 1e-300), 1.5);
  return out;
}

DiagnosticReport loss_distribution_diagnostic(
    const SpinAlgebra& alg, const CircuitParams& p, const PriorSpec& prior,
    const TargetSpec& target, const std::vector<double>& shots,
    const DiagnosticOptions& opts) {
  if (shots.empty()) {
    throw std::invalid_argument("cumulants: empty shot list");
  }
  DiagnosticReport report;
  report.noisy = opts.repetitions < 100;

  const RVec inputs = sample_prior(prior, opts.sample_count, opts.seed);
  const RVec targets = target(inputs);

  for (std::size_t i = 0; i < shots.size(); ++i) {
    DiagnosticRow row;
    row.shots = shots[i];
    row.predicted = predict_loss_cumulants(alg, p, inputs, targets, shots[i]);
    row.observed = sample_loss_distribution(alg, p, inputs, targets, shots[i],
                                            opts.repetitions,
                                            substream_seed(opts.seed, 1000 + i));
    report.rows.push_back(row);
  }

  if (shots.size() >= 2) {
    RVec log_s(shots.size()), log_mean(shots.size()), log_var(shots.size());
    for (std::size_t i = 0; i < shots.size(); ++i) {
      log_s[i] = std::log(shots[i]);
      log_mean[i] = std::log(std::abs(report.rows[i].observed.mean_shift));
      log_var[i] = std::log(std::abs(report.rows[i].observed.variance));
    }
    report.mean_shift_slope = fit_slope(log_s, log_mean);
    report.variance_slope = fit_slope(log_s, log_var);
  }
  return report;
}

}  // namespace bqi
