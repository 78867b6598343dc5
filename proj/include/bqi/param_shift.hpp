#pragma once

#include "bqi/linalg.hpp"

#include <functional>

namespace bqi {

/// Exact derivative of an expectation generated by a two-eigenvalue
/// Hermitian generator with spectrum {+r, -r}:
///   dg/dtheta = r * [g(theta + pi/(4r)) - g(theta - pi/(4r))].
double parameter_shift(const std::function<double(double)>& g, double theta,
                       double r = 0.5);

/// Real trigonometric polynomial sum_{m<=degree} a_m cos(m t) + b_m sin(m t).
struct TrigPoly {
  int degree = 0;
  RVec cosine;  // degree+1 entries, cosine[0] is the constant term
  RVec sine;    // degree entries for sin(m t), m = 1..degree

  double operator()(double theta) const;
  double derivative(double theta) const;
};

/// Least-squares fit to samples (angles, values); exact whenever the signal
/// is band limited to the requested degree and enough samples are given.
TrigPoly fit_trig_poly(const RVec& angles, const RVec& values, int degree);

/// Sample g on 2*degree+1 equispaced angles over [0, 2pi) and fit; the
/// general-purpose differentiator for multi-gap generators.
TrigPoly trig_interpolate(const std::function<double(double)>& g, int degree);

}  // namespace bqi
