#include "bqi/readout.hpp"

#include "bqi/threads.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bqi {

namespace {

void check_shots(double shots) {
  if (std::isinf(shots) && shots > 0) return;
  if (!(shots >= 1.0) || !std::isfinite(shots)) {
    throw std::invalid_argument("shot budget must be >= 1 or infinite");
  }
}

struct MomentBlock {
  RMat gram;
  RMat diag_second;  // E[diag(x)] accumulated alongside for the noise term
  RVec cross;
  double target_sq = 0.0;
};

MomentBlock accumulate_block(const FeatureTable& t, Eigen::Index lo,
                             Eigen::Index hi) {
  const int k = t.feature_dim();
  MomentBlock b{RMat::Zero(k, k), RMat::Zero(k, k), RVec::Zero(k), 0.0};
  for (Eigen::Index n = lo; n < hi; ++n) {
    const double w = t.weights[n];
    const auto x = t.rows.row(n).transpose();
    b.gram.noalias() += w * x * x.transpose();
    b.diag_second.diagonal() += w * x;
    b.cross.noalias() += (w * t.targets[n]) * x;
    b.target_sq += w * t.targets[n] * t.targets[n];
  }
  return b;
}

}  // namespace

MomentSet compute_moments(const FeatureTable& t) {
  if (t.size() == 0) throw std::invalid_argument("empty feature table");
  constexpr Eigen::Index kBlock = 512;
  std::vector<MomentBlock> blocks;
  for (Eigen::Index lo = 0; lo < t.size(); lo += kBlock) {
    blocks.push_back(accumulate_block(t, lo, std::min(lo + kBlock, t.size())));
  }
  // Pairwise tree over blocks.
  while (blocks.size() > 1) {
    std::vector<MomentBlock> next;
    for (std::size_t i = 0; i + 1 < blocks.size(); i += 2) {
      MomentBlock m = std::move(blocks[i]);
      m.gram += blocks[i + 1].gram;
      m.diag_second += blocks[i + 1].diag_second;
      m.cross += blocks[i + 1].cross;
      m.target_sq += blocks[i + 1].target_sq;
      next.push_back(std::move(m));
    }
    if (blocks.size() % 2 == 1) next.push_back(std::move(blocks.back()));
    blocks = std::move(next);
  }
  MomentSet m;
  m.gram = blocks[0].gram;
  m.noise = blocks[0].diag_second - blocks[0].gram;
  m.cross = blocks[0].cross;
  m.target_sq = blocks[0].target_sq;
  return m;
}

LinearReadout optimal_weights(const MomentSet& m, double shots, double ridge) {
  check_shots(shots);
  if (ridge < 0.0) throw std::invalid_argument("ridge must be non-negative");
  RMat a = m.gram;
  if (!std::isinf(shots)) a += m.noise / shots;
  if (ridge > 0.0) a.diagonal().array() += ridge;
  LinearReadout r;
  r.weights = psd_pinv_solve(a, m.cross);
  r.shots = shots;
  r.ridge = ridge;
  r.predicted_loss = m.target_sq - m.cross.dot(r.weights);
  r.training = LinearReadout::Training::closed_form;
  return r;
}

LinearReadout empirical_weights(const FeatureTable& t, double ridge) {
  if (t.size() == 0) throw std::invalid_argument("empty feature table");
  if (ridge < 0.0) throw std::invalid_argument("ridge must be non-negative");
  const int k = t.feature_dim();
  const Eigen::Index n = t.size();
  RVec scale = t.weights.cwiseMax(0.0).cwiseSqrt();
  RMat a(n + k, k);
  RVec y = RVec::Zero(n + k);
  a.topRows(n) = scale.asDiagonal() * t.rows;
  a.bottomRows(k) = std::sqrt(ridge) * RMat::Identity(k, k);
  y.head(n) = scale.cwiseProduct(t.targets);

  Eigen::ColPivHouseholderQR<RMat> qr(a);
  qr.setThreshold(kPinvCutoff);
  LinearReadout r;
  r.weights = qr.solve(y);
  r.shots = t.mode == FeatureTable::Mode::sampled
                ? t.shots
                : std::numeric_limits<double>::infinity();
  r.ridge = ridge;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = t.targets[i] - t.rows.row(i).dot(r.weights);
    loss += t.weights[i] * e * e;
  }
  r.predicted_loss = loss;
  r.training = LinearReadout::Training::empirical;
  return r;
}

double predict(const LinearReadout& readout, const RVec& features) {
  if (features.size() != readout.weights.size()) {
    throw std::invalid_argument("feature dimension does not match weights");
  }
  return readout.weights.dot(features);
}

MseParts pointwise_mse(const SpinAlgebra& alg, const CircuitParams& p,
                       const LinearReadout& readout, const TargetSpec& target,
                       double u, double shots) {
  check_shots(shots);
  const RVec x = circuit_probabilities(alg, p, u);
  MseParts out;
  const double err = target(u) - readout.weights.dot(x);
  out.bias_sq = err * err;
  if (!std::isinf(shots)) {
    // w^T (diag(x) - x x^T) w = sum_j w_j^2 x_j - (w . x)^2
    const double s = readout.weights.dot(x);
    out.variance =
        ((readout.weights.array().square() * x.array()).sum() - s * s) / shots;
  }
  out.total = out.bias_sq + out.variance;
  return out;
}

RiskReport bayes_risk(const SpinAlgebra& alg, const CircuitParams& p,
                      const LinearReadout& readout, const PriorSpec& prior,
                      const TargetSpec& target, double shots,
                      const RiskOptions& options) {
  check_shots(shots);
  target.validate();
  WeightedGrid grid =
      evaluation_grid(prior, options.quadrature_nodes, options.grid_points);

  const Eigen::Index n = grid.points.size();
  RVec mse(n), bias(n), var(n), fsq(n);
  parallel_for(n, [&](std::int64_t i) {
    MseParts parts =
        pointwise_mse(alg, p, readout, target, grid.points[i], shots);
    const double f = target(grid.points[i]);
    mse[i] = parts.total;
    bias[i] = parts.bias_sq;
    var[i] = parts.variance;
    fsq[i] = f * f;
  });

  RiskReport report;
  RVec wmse = grid.weights.cwiseProduct(mse);
  RVec wfsq = grid.weights.cwiseProduct(fsq);
  report.bmse = pairwise_sum(wmse.data(), wmse.size());
  report.target_second_moment = pairwise_sum(wfsq.data(), wfsq.size());
  report.bmse_db = to_decibel(report.bmse);
  report.capacity = report.target_second_moment > 0.0
                        ? 1.0 - report.bmse / report.target_second_moment
                        : 0.0;
  report.prior_variance = prior.variance();
  if (report.bmse > 0.0) {
    const double inv = 1.0 / report.bmse - 1.0 / report.prior_variance;
    if (inv > 0.0) report.mse_m = 1.0 / inv;
  }

  // Display curve around the prior mass.
  const double mu = prior.mean();
  const double spread = std::sqrt(report.prior_variance);
  const double lo = std::max(-M_PI, mu - 4.0 * spread);
  const double hi = std::min(M_PI, mu + 4.0 * spread);
  report.grid_u = RVec::LinSpaced(options.curve_points, lo, hi);
  report.grid_mse = RVec(options.curve_points);
  report.grid_bias_sq = RVec(options.curve_points);
  report.grid_variance = RVec(options.curve_points);
  parallel_for(options.curve_points, [&](std::int64_t i) {
    MseParts parts =
        pointwise_mse(alg, p, readout, target, report.grid_u[i], shots);
    report.grid_mse[i] = parts.total;
    report.grid_bias_sq[i] = parts.bias_sq;
    report.grid_variance[i] = parts.variance;
  });
  return report;
}

}  // namespace bqi
