#include "bqi/param_shift.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

namespace bqi {

double parameter_shift(const std::function<double(double)>& g, double theta,
                       double r) {
  if (!(r > 0)) throw std::invalid_argument("parameter_shift: r must be > 0");
  const double shift = M_PI / (4.0 * r);
  return r * (g(theta + shift) - g(theta - shift));
}

double TrigPoly::operator()(double theta) const {
  double acc = cosine[0];
  for (int m = 1; m <= degree; ++m) {
    acc += cosine[m] * std::cos(m * theta) + sine[m - 1] * std::sin(m * theta);
  }
  return acc;
}

double TrigPoly::derivative(double theta) const {
  double acc = 0.0;
  for (int m = 1; m <= degree; ++m) {
    acc += m * (sine[m - 1] * std::cos(m * theta) -
                cosine[m] * std::sin(m * theta));
  }
  return acc;
}

TrigPoly fit_trig_poly(const RVec& angles, const RVec& values, int degree) {
  if (degree < 0) throw std::invalid_argument("fit_trig_poly: degree < 0");
  if (angles.size() != values.size()) {
    throw std::invalid_argument("fit_trig_poly: size mismatch");
  }
  const Eigen::Index n = angles.size();
  const Eigen::Index cols = 2 * degree + 1;
  if (n < cols) {
    throw std::invalid_argument("fit_trig_poly: need at least 2*degree+1 samples");
  }
  RMat design(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (int m = 1; m <= degree; ++m) {
      design(i, 2 * m - 1) = std::cos(m * angles[i]);
      design(i, 2 * m) = std::sin(m * angles[i]);
    }
  }
  RVec coeff = design.colPivHouseholderQr().solve(values);
  TrigPoly poly;
  poly.degree = degree;
  poly.cosine = RVec(degree + 1);
  poly.sine = RVec(degree);
  poly.cosine[0] = coeff[0];
  for (int m = 1; m <= degree; ++m) {
    poly.cosine[m] = coeff[2 * m - 1];
    poly.sine[m - 1] = coeff[2 * m];
  }
  return poly;
}

TrigPoly trig_interpolate(const std::function<double(double)>& g, int degree) {
  const int n = 2 * degree + 1;
  RVec angles(n), values(n);
  for (int i = 0; i < n; ++i) {
    angles[i] = 2.0 * M_PI * i / n;
    values[i] = g(angles[i]);
  }
  return fit_trig_poly(angles, values, degree);
}

}  // namespace bqi
