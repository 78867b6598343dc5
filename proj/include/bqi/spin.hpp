#pragma once

#include "bqi/linalg.hpp"

#include <cstdint>

namespace bqi {

enum class Axis { x, y, z };

/// Collective spin operators for L qubits restricted to the maximal-spin
/// (j = L/2) subspace. Basis states are indexed by the spin-up count
/// k = 0..L, i.e. Jz eigenvalue m = k - L/2 in ascending order.
struct SpinAlgebra {
  int qubits = 0;
  int dim = 0;  // K = L + 1
  CMat jx, jy, jz;
  CMat jx2, jz2;
  RVec jz_diag;   // m values
  RMat jx_vecs;   // eigenvectors of Jx (real orthogonal)
  RVec jx_vals;   // eigenvalues of Jx
  CMat jx_vecs_c, jx_vecs_ct;  // complex copies for fast gate application
};

/// Build the algebra for 1 <= qubits <= 256.
SpinAlgebra build_algebra(int qubits);

struct DickeState {
  CVec amp;
  int dim() const { return static_cast<int>(amp.size()); }
};

/// |m = -L/2>, every spin down.
DickeState ground_state(const SpinAlgebra& alg);

/// Layer parameters are stored per layer as [tz, tx, rx]: a Jz^2 twist
/// angle, a Jx^2 twist angle and a Jx rotation angle.
struct CircuitParams {
  int entangler_layers = 0;
  int decoder_layers = 0;
  RVec theta_en;  // 3 * entangler_layers
  RVec theta_de;  // 3 * decoder_layers
  /// Reading-order switch for the decoder's fixed pi/2 pulse: applied after
  /// the parameterized layers by default, before them when set.
  bool decoder_half_pi_first = false;

  void validate() const;
  int parameter_count() const;
  RVec to_vector() const;  // theta_en then theta_de
  static CircuitParams from_vector(int entangler_layers, int decoder_layers,
                                   const RVec& packed,
                                   bool decoder_half_pi_first = false);
  /// Angles reduced to [0, 2*pi); the circuit action is unchanged.
  CircuitParams canonical() const;
};

/// exp(-i angle J_axis) applied in place.
void apply_rotation(const SpinAlgebra& alg, DickeState& state, Axis axis,
                    double angle);

/// exp(-i angle J_axis^2) applied in place; axis must be x or z.
void apply_twist(const SpinAlgebra& alg, DickeState& state, Axis axis,
                 double angle);

/// U_en |ground>: a pi/2 y-pulse followed by the entangler layers.
DickeState entangled_state(const SpinAlgebra& alg, const CircuitParams& p);

/// R_z(u), the phase-encoding step.
void apply_embedding(const SpinAlgebra& alg, DickeState& state, double u);

/// Decoder layers plus the fixed pi/2 x-pulse.
void apply_decoder(const SpinAlgebra& alg, DickeState& state,
                   const CircuitParams& p);

/// Full state preparation U_de R_z(u) U_en |ground>.
DickeState run_circuit(const SpinAlgebra& alg, const CircuitParams& p,
                       double u);

/// Probabilities of the projective Jz measurement, indexed by spin-up count.
RVec outcome_probabilities(const DickeState& state);

RVec circuit_probabilities(const SpinAlgebra& alg, const CircuitParams& p,
                           double u);

/// Empirical outcome frequencies from `shots` independent projective
/// measurements; entries are multiples of 1/shots and sum to one.
RVec sample_shots(const RVec& probs, std::int64_t shots, std::uint64_t seed);

/// Single-shot covariance diag(x) - x x^T of the frequency vector.
RMat shot_covariance(const RVec& probs);

/// Rows 0..order hold x(u) and its u-derivatives d^n x / du^n, computed
/// analytically by differentiating the encoding phase.
RMat embedding_derivatives(const SpinAlgebra& alg, const CircuitParams& p,
                           double u, int order);

}  // namespace bqi
