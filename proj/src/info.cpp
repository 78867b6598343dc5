#include "bqi/info.hpp"

#include "bqi/features.hpp"
#include "bqi/readout.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace bqi {

namespace {

InfoResult accumulate_info(const RMat& d, int max_order,
                           const std::function<double(int)>& term) {
  InfoResult out;
  for (int j = 0; j < d.cols(); ++j) {
    if (d(0, j) < kInfoDropThreshold) {
      ++out.dropped;
      if (std::abs(d(1, j)) > kInfoSlopeWarning) out.dropped_significant = true;
      continue;
    }
    out.value += term(j);
  }
  (void)max_order;
  return out;
}

}  // namespace

InfoResult fisher_information(const SpinAlgebra& alg, const CircuitParams& p,
                              double u0) {
  const RMat d = embedding_derivatives(alg, p, u0, 1);
  return accumulate_info(d, 1, [&](int j) {
    return d(1, j) * d(1, j) / d(0, j);
  });
}

InfoResult bhattacharyya_information(const SpinAlgebra& alg,
                                     const CircuitParams& p, double u0) {
  const RMat d = embedding_derivatives(alg, p, u0, 3);
  return accumulate_info(d, 3, [&](int j) {
    const double x = d(0, j), x1 = d(1, j), x2 = d(2, j), x3 = d(3, j);
    return x1 * x3 / x - x1 * x1 * x2 / (2.0 * x * x);
  });
}

ExpansionReport verify_expansion(const SpinAlgebra& alg,
                                 const CircuitParams& p, const RVec& sigmas,
                                 int quadrature_nodes) {
  if (sigmas.size() < 3) {
    throw std::invalid_argument("need at least three widths for the fit");
  }
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) {
      throw std::invalid_argument("widths must be positive");
    }
  }
  ExpansionReport report;
  report.fisher = fisher_information(alg, p, 0.0).value;
  report.bhattacharyya = bhattacharyya_information(alg, p, 0.0).value;

  RVec sorted = sigmas;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  const TargetSpec identity = TargetSpec::identity();
  for (Eigen::Index i = 0; i < sorted.size(); ++i) {
    const double s = sorted[i];
    WeightedGrid g = evaluation_grid(PriorSpec::gaussian(s), quadrature_nodes, 0);
    FeatureTable t =
        exact_features(alg, p, g.points, g.weights, identity(g.points));
    LinearReadout r = optimal_weights(compute_moments(t), 1.0);
    ExpansionRow row;
    row.sigma = s;
    row.exact_loss = r.predicted_loss;
    row.expansion = s * s - std::pow(s, 4) * report.fisher -
                    std::pow(s, 6) * report.bhattacharyya;
    row.residual = row.exact_loss - row.expansion;
    report.rows.push_back(row);
  }

  RVec lx(3), ly(3);
  for (int i = 0; i < 3; ++i) {
    lx[i] = std::log(report.rows[i].sigma);
    ly[i] = std::log(std::max(std::abs(report.rows[i].residual), 1e-300));
  }
  report.fitted_exponent = fit_slope(lx, ly);
  const double intercept = ly.mean() - report.fitted_exponent * lx.mean();
  report.fitted_scale = std::exp(intercept);
  return report;
}

std::vector<ReferenceRow> reference_curves(const std::vector<int>& qubit_counts,
                                           const PriorSpec& prior) {
  prior.validate();
  std::vector<ReferenceRow> rows;
  for (int l : qubit_counts) {
    if (l < 1) throw std::invalid_argument("qubit counts must be positive");
    ReferenceRow r;
    r.qubits = l;
    r.sql = 1.0 / l;
    r.hl = 1.0 / (static_cast<double>(l) * l);
    // Tabulated optimal-interrogation risks for the 32-qubit reference
    // settings studied here.
    if (l == 32) {
      if (prior.kind == PriorSpec::Kind::gaussian &&
          std::abs(prior.sigma - 0.7981) < 1e-3) {
        r.oqi = 1e-2;  // -20 dB
      } else if (prior.kind == PriorSpec::Kind::mixture &&
                 prior.components.size() == 2 &&
                 std::abs(prior.components[0].weight - 0.5) < 1e-9 &&
                 std::abs(std::abs(prior.components[0].mean) - 1.0) < 1e-9 &&
                 std::abs(prior.components[0].sigma - std::sqrt(0.05)) < 1e-6) {
        r.oqi = std::pow(10.0, -2.25);  // -22.5 dB
      }
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace bqi
