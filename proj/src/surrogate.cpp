#include "bqi/surrogate.hpp"

#include "bqi/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bqi {

double trig_correlation(double gamma, int harmonics, double delta) {
  // sum_{m=0}^{M} gamma^m cos(m delta) via the geometric closed form,
  // normalized by the value at delta = 0.
  const std::complex<double> q = gamma * std::polar(1.0, delta);
  const std::complex<double> series =
      (1.0 - std::pow(q, harmonics + 1)) / (1.0 - q);
  const double norm =
      (1.0 - std::pow(gamma, harmonics + 1)) / (1.0 - gamma);
  return series.real() / norm;
}

namespace {

// Unconstrained parametrization for the hyperparameter search.
struct HyperMap {
  int dims = 0;

  static double squash(double t, double lo, double hi) {
    return lo + (hi - lo) / (1.0 + std::exp(-t));
  }
  static double unsquash(double v, double lo, double hi) {
    const double frac = std::clamp((v - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return std::log(frac / (1.0 - frac));
  }

  TrigKernelParams decode(const RVec& t, int harmonics) const {
    TrigKernelParams p;
    p.harmonics = harmonics;
    p.gamma = RVec(dims);
    for (int d = 0; d < dims; ++d) p.gamma[d] = squash(t[d], 1e-4, 0.995);
    p.signal = std::exp(std::clamp(t[dims], -12.0, 8.0));
    p.noise = kNoiseFloor + std::exp(std::clamp(t[dims + 1], -23.0, 2.0));
    return p;
  }
  RVec encode(const TrigKernelParams& p) const {
    RVec t(dims + 2);
    for (int d = 0; d < dims; ++d) t[d] = unsquash(p.gamma[d], 1e-4, 0.995);
    t[dims] = std::log(std::max(p.signal, 1e-11));
    t[dims + 1] = std::log(std::max(p.noise - kNoiseFloor, 1e-22));
    return t;
  }
};

// Standard Nelder-Mead on an unconstrained vector; deterministic.
RVec nelder_mead(const std::function<double(const RVec&)>& f, RVec start,
                 double step, int max_iter, double* best_out) {
  const int n = int(start.size());
  std::vector<RVec> pts(n + 1, start);
  std::vector<double> val(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return val[a] < val[b]; });
    std::vector<RVec> p2;
    std::vector<double> v2;
    p2.reserve(n + 1);
    v2.reserve(n + 1);
    for (int i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(val[i]);
    }
    pts.swap(p2);
    val.swap(v2);
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    order();
    if (std::abs(val[n] - val[0]) < 1e-10 * (1.0 + std::abs(val[0]))) break;
    RVec centroid = RVec::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    RVec refl = centroid + (centroid - pts[n]);
    double f_refl = f(refl);
    if (f_refl < val[0]) {
      RVec expa = centroid + 2.0 * (centroid - pts[n]);
      double f_expa = f(expa);
      if (f_expa < f_refl) {
        pts[n] = expa;
        val[n] = f_expa;
      } else {
        pts[n] = refl;
        val[n] = f_refl;
      }
    } else if (f_refl < val[n - 1]) {
      pts[n] = refl;
      val[n] = f_refl;
    } else {
      RVec contr = centroid + 0.5 * (pts[n] - centroid);
      double f_contr = f(contr);
      if (f_contr < val[n]) {
        pts[n] = contr;
        val[n] = f_contr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  if (best_out) *best_out = val[0];
  return pts[0];
}

}  // namespace

Surrogate::Surrogate(RMat points, RVec values, TrigKernelParams params)
    : points_(std::move(points)),
      values_(std::move(values)),
      params_(std::move(params)) {
  if (points_.rows() != values_.size()) {
    throw std::invalid_argument("Surrogate: row/value count mismatch");
  }
  if (points_.rows() < 2) {
    throw std::invalid_argument("Surrogate: need at least 2 points");
  }
  if (params_.gamma.size() != points_.cols()) {
    throw std::invalid_argument("Surrogate: gamma size mismatch");
  }
  if (params_.harmonics < 1) {
    throw std::invalid_argument("Surrogate: harmonics must be >= 1");
  }
  params_.noise = std::max(params_.noise, kNoiseFloor);
  shift_ = values_.mean();
  const double var =
      (values_.array() - shift_).square().sum() / values_.size();
  scale_ = std::sqrt(std::max(var, 1e-16));
  scaled_ = (values_.array() - shift_) / scale_;
  factorize();
}

double Surrogate::kernel(const RVec& a, const RVec& b) const {
  double corr = params_.signal;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    corr *= trig_correlation(params_.gamma[d], params_.harmonics, a[d] - b[d]);
  }
  return corr;
}

void Surrogate::factorize() {
  const Eigen::Index n = points_.rows();
  RMat k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(points_.row(i).transpose(),
                              points_.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += params_.noise;
  }
  chol_.compute(k);
  if (chol_.info() != Eigen::Success) {
    // Retry with a stiffer diagonal before giving up.
    k.diagonal().array() += 1e-8 * (1.0 + k.diagonal().maxCoeff());
    chol_.compute(k);
  }
  if (chol_.info() != Eigen::Success) {
    valid_ = false;
    lml_ = -std::numeric_limits<double>::infinity();
    return;
  }
  alpha_ = chol_.solve(scaled_);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_det += 2.0 * std::log(chol_.matrixL()(i, i));
  }
  lml_ = -0.5 * scaled_.dot(alpha_) - 0.5 * log_det -
         0.5 * n * std::log(2.0 * M_PI);
  valid_ = true;
}

void Surrogate::optimize_hyperparameters(int starts, std::uint64_t seed,
                                         int max_iterations) {
  if (starts < 1) throw std::invalid_argument("Surrogate: starts must be >= 1");
  if (max_iterations < 1)
    throw std::invalid_argument("Surrogate: max_iterations must be >= 1");
  HyperMap map{int(points_.cols())};
  const int harmonics = params_.harmonics;

  auto negative_lml = [&](const RVec& t) {
    TrigKernelParams trial = map.decode(t, harmonics);
    TrigKernelParams saved = params_;
    params_ = trial;
    factorize();
    const double value =
        valid_ ? -lml_ : std::numeric_limits<double>::max();
    params_ = saved;
    return value;
  };

  RVec best_t = map.encode(params_);
  double best = negative_lml(best_t);
  for (int s = 0; s < starts; ++s) {
    RVec t0;
    if (s == 0) {
      t0 = map.encode(params_);
    } else {
      Rng rng(substream_seed(seed, std::uint64_t(s)));
      t0 = RVec(map.dims + 2);
      for (int d = 0; d < map.dims; ++d) {
        t0[d] = HyperMap::unsquash(rng.uniform(0.05, 0.95), 1e-4, 0.995);
      }
      t0[map.dims] = rng.uniform(-2.0, 2.0);
      t0[map.dims + 1] = rng.uniform(-16.0, -4.0);
    }
    double reached = 0.0;
    RVec t = nelder_mead(negative_lml, t0, 0.5, max_iterations, &reached);
    if (reached < best) {
      best = reached;
      best_t = t;
    }
  }
  params_ = map.decode(best_t, harmonics);
  factorize();
  if (!valid_) {
    // Fall back to a safe default rather than leaving a broken model.
    params_.noise = std::max(params_.noise * 10.0, 1e-6);
    factorize();
  }
}

Surrogate::Prediction Surrogate::predict(const RVec& point) const {
  if (!valid_) throw std::runtime_error("Surrogate: factorization failed");
  const Eigen::Index n = points_.rows();
  RVec cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cross[i] = kernel(point, points_.row(i).transpose());
  }
  const double mean_scaled = cross.dot(alpha_);
  RVec solved = chol_.solve(cross);
  const double var_scaled =
      std::max(kernel(point, point) - cross.dot(solved), 0.0);
  Prediction out;
  out.mean = shift_ + scale_ * mean_scaled;
  out.stddev = scale_ * std::sqrt(var_scaled);
  return out;
}

}  // namespace bqi
