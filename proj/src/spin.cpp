#include "bqi/spin.hpp"

#include "bqi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bqi {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr Complex kImag{0.0, 1.0};

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

/// Multiply amplitudes by exp(-i angle g_k) for a diagonal generator g.
void apply_diagonal(DickeState& state, const RVec& gen, double angle) {
  for (int k = 0; k < state.dim(); ++k) {
    state.amp[k] *= std::exp(-kImag * (angle * gen[k]));
  }
}

/// Generic x-generator gate through the cached Jx eigenbasis.
void apply_x_gate(const SpinAlgebra& alg, DickeState& state, double angle,
                  bool squared) {
  CVec y = alg.jx_vecs_ct * state.amp;
  for (int k = 0; k < y.size(); ++k) {
    const double g = squared ? alg.jx_vals[k] * alg.jx_vals[k] : alg.jx_vals[k];
    y[k] *= std::exp(-kImag * (angle * g));
  }
  state.amp = alg.jx_vecs_c * y;
}

}  // namespace

SpinAlgebra build_algebra(int qubits) {
  if (qubits < 1 || qubits > 256) {
    throw std::invalid_argument("qubit count must be in [1, 256]");
  }
  SpinAlgebra alg;
  alg.qubits = qubits;
  alg.dim = qubits + 1;
  const int k = alg.dim;
  const double j = 0.5 * qubits;

  alg.jz_diag = RVec(k);
  for (int i = 0; i < k; ++i) alg.jz_diag[i] = i - j;

  CMat jplus = CMat::Zero(k, k);
  for (int i = 0; i + 1 < k; ++i) {
    const double m = alg.jz_diag[i];
    jplus(i + 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  const CMat jminus = jplus.adjoint();
  alg.jx = 0.5 * (jplus + jminus);
  alg.jy = (jplus - jminus) / (2.0 * kImag);
  alg.jz = alg.jz_diag.cast<Complex>().asDiagonal();
  alg.jx2 = alg.jx * alg.jx;
  alg.jz2 = alg.jz * alg.jz;

  Eigen::SelfAdjointEigenSolver<RMat> es(alg.jx.real());
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("Jx eigendecomposition failed");
  }
  alg.jx_vals = es.eigenvalues();
  alg.jx_vecs = es.eigenvectors();
  alg.jx_vecs_c = alg.jx_vecs.cast<Complex>();
  alg.jx_vecs_ct = alg.jx_vecs.transpose().cast<Complex>();
  return alg;
}

DickeState ground_state(const SpinAlgebra& alg) {
  DickeState s;
  s.amp = CVec::Zero(alg.dim);
  s.amp[0] = 1.0;
  return s;
}

void CircuitParams::validate() const {
  if (entangler_layers < 0 || decoder_layers < 0) {
    throw std::invalid_argument("layer counts must be non-negative");
  }
  if (theta_en.size() != 3 * entangler_layers) {
    throw std::invalid_argument("entangler parameter count must be 3 per layer");
  }
  if (theta_de.size() != 3 * decoder_layers) {
    throw std::invalid_argument("decoder parameter count must be 3 per layer");
  }
  if (!theta_en.allFinite() || !theta_de.allFinite()) {
    throw std::invalid_argument("circuit angles must be finite");
  }
}

int CircuitParams::parameter_count() const {
  return static_cast<int>(theta_en.size() + theta_de.size());
}

RVec CircuitParams::to_vector() const {
  RVec v(parameter_count());
  v << theta_en, theta_de;
  return v;
}

CircuitParams CircuitParams::from_vector(int entangler_layers,
                                         int decoder_layers, const RVec& packed,
                                         bool decoder_half_pi_first) {
  CircuitParams p;
  p.entangler_layers = entangler_layers;
  p.decoder_layers = decoder_layers;
  p.decoder_half_pi_first = decoder_half_pi_first;
  if (packed.size() != 3 * (entangler_layers + decoder_layers)) {
    throw std::invalid_argument("packed parameter vector has wrong length");
  }
  p.theta_en = packed.head(3 * entangler_layers);
  p.theta_de = packed.tail(3 * decoder_layers);
  return p;
}

CircuitParams CircuitParams::canonical() const {
  validate();
  CircuitParams p = *this;
  for (int i = 0; i < p.theta_en.size(); ++i) p.theta_en[i] = wrap_angle(p.theta_en[i]);
  for (int i = 0; i < p.theta_de.size(); ++i) p.theta_de[i] = wrap_angle(p.theta_de[i]);
  return p;
}

void apply_rotation(const SpinAlgebra& alg, DickeState& state, Axis axis,
                    double angle) {
  if (state.dim() != alg.dim) {
    throw std::invalid_argument("state dimension does not match algebra");
  }
  switch (axis) {
    case Axis::z:
      apply_diagonal(state, alg.jz_diag, angle);
      return;
    case Axis::x:
      apply_x_gate(alg, state, angle, false);
      return;
    case Axis::y:
      // exp(-i a Jy) = R_z(pi/2) exp(-i a Jx) R_z(-pi/2)
      apply_diagonal(state, alg.jz_diag, -0.5 * M_PI);
      apply_x_gate(alg, state, angle, false);
      apply_diagonal(state, alg.jz_diag, 0.5 * M_PI);
      return;
  }
  throw std::invalid_argument("unknown axis");
}

void apply_twist(const SpinAlgebra& alg, DickeState& state, Axis axis,
                 double angle) {
  if (state.dim() != alg.dim) {
    throw std::invalid_argument("state dimension does not match algebra");
  }
  if (axis == Axis::z) {
    RVec gen2 = alg.jz_diag.array().square();
    apply_diagonal(state, gen2, angle);
  } else if (axis == Axis::x) {
    apply_x_gate(alg, state, angle, true);
  } else {
    throw std::invalid_argument("twists are only defined about x and z");
  }
}

DickeState entangled_state(const SpinAlgebra& alg, const CircuitParams& p) {
  p.validate();
  DickeState s = ground_state(alg);
  apply_rotation(alg, s, Axis::y, 0.5 * M_PI);
  for (int l = 0; l < p.entangler_layers; ++l) {
    apply_twist(alg, s, Axis::z, p.theta_en[3 * l]);
    apply_twist(alg, s, Axis::x, p.theta_en[3 * l + 1]);
    apply_rotation(alg, s, Axis::x, p.theta_en[3 * l + 2]);
  }
  return s;
}

void apply_embedding(const SpinAlgebra& alg, DickeState& state, double u) {
  apply_diagonal(state, alg.jz_diag, u);
}

void apply_decoder(const SpinAlgebra& alg, DickeState& state,
                   const CircuitParams& p) {
  if (p.decoder_half_pi_first) apply_rotation(alg, state, Axis::x, 0.5 * M_PI);
  for (int l = 0; l < p.decoder_layers; ++l) {
    apply_twist(alg, state, Axis::z, p.theta_de[3 * l]);
    apply_twist(alg, state, Axis::x, p.theta_de[3 * l + 1]);
    apply_rotation(alg, state, Axis::x, p.theta_de[3 * l + 2]);
  }
  if (!p.decoder_half_pi_first) apply_rotation(alg, state, Axis::x, 0.5 * M_PI);
}

DickeState run_circuit(const SpinAlgebra& alg, const CircuitParams& p,
                       double u) {
  DickeState s = entangled_state(alg, p);
  apply_embedding(alg, s, u);
  apply_decoder(alg, s, p);
  return s;
}

RVec outcome_probabilities(const DickeState& state) {
  RVec x = state.amp.cwiseAbs2();
  const double norm = x.sum();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("state is not normalized");
  }
  return x / norm;
}

RVec circuit_probabilities(const SpinAlgebra& alg, const CircuitParams& p,
                           double u) {
  return outcome_probabilities(run_circuit(alg, p, u));
}

RVec sample_shots(const RVec& probs, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shot count must be positive");
  if (probs.minCoeff() < -1e-12 || std::abs(probs.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities must be a distribution");
  }
  const int k = static_cast<int>(probs.size());
  RVec cdf(k);
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += std::max(probs[i], 0.0);
    cdf[i] = acc;
  }
  cdf[k - 1] = 1.0;
  Rng rng(seed);
  RVec counts = RVec::Zero(k);
  for (std::int64_t s = 0; s < shots; ++s) {
    const double r = rng.uniform();
    int lo = 0, hi = k - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (r < cdf[mid]) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    counts[lo] += 1.0;
  }
  return counts / static_cast<double>(shots);
}

RMat shot_covariance(const RVec& probs) {
  RMat cov = -probs * probs.transpose();
  cov.diagonal() += probs;
  return cov;
}

RMat embedding_derivatives(const SpinAlgebra& alg, const CircuitParams& p,
                           double u, int order) {
  if (order < 0 || order > 8) {
    throw std::invalid_argument("derivative order must be in [0, 8]");
  }
  DickeState phi = entangled_state(alg, p);
  apply_embedding(alg, phi, u);

  // a^(n) = U_de (-i Jz)^n R_z(u) U_en |ground>
  std::vector<CVec> a(order + 1);
  CVec v = phi.amp;
  for (int n = 0; n <= order; ++n) {
    DickeState s{v};
    apply_decoder(alg, s, p);
    a[n] = s.amp;
    for (int k = 0; k < v.size(); ++k) v[k] *= -kImag * alg.jz_diag[k];
  }

  // Leibniz rule on x_j = a_j conj(a_j).
  RMat out(order + 1, alg.dim);
  std::vector<std::vector<double>> choose(order + 1,
                                          std::vector<double>(order + 1, 0.0));
  for (int n = 0; n <= order; ++n) {
    choose[n][0] = 1.0;
    for (int r = 1; r <= n; ++r) {
      choose[n][r] = choose[n - 1][r - 1] + (r <= n - 1 ? choose[n - 1][r] : 0.0);
    }
  }
  for (int n = 0; n <= order; ++n) {
    for (int j = 0; j < alg.dim; ++j) {
      double s = 0.0;
      for (int r = 0; r <= n; ++r) {
        s += choose[n][r] * (a[r][j] * std::conj(a[n - r][j])).real();
      }
      out(n, j) = s;
    }
  }
  return out;
}

}  // namespace bqi
