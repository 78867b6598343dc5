#include "bqi/prior.hpp"

#include "bqi/quadrature.hpp"
#include "bqi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bqi {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

double gauss_density(double u, double mean, double sigma) {
  const double z = (u - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

double truncation_mass(double sigma) {
  return std::erf(M_PI / (kSqrt2 * sigma));
}

WeightedGrid trapezoid_grid(const PriorSpec& prior, int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points");
  WeightedGrid g;
  g.points = RVec::LinSpaced(points, -M_PI, M_PI);
  g.weights = RVec(points);
  for (int i = 0; i < points; ++i) {
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    g.weights[i] = w * prior.density(g.points[i]);
  }
  g.weights /= g.weights.sum();
  return g;
}

}  // namespace

PriorSpec PriorSpec::gaussian(double sigma) {
  PriorSpec p;
  p.kind = Kind::gaussian;
  p.sigma = sigma;
  p.validate();
  return p;
}

PriorSpec PriorSpec::truncated_gaussian(double sigma) {
  PriorSpec p;
  p.kind = Kind::truncated_gaussian;
  p.sigma = sigma;
  p.validate();
  return p;
}

PriorSpec PriorSpec::mixture(std::vector<GaussianComponent> components) {
  PriorSpec p;
  p.kind = Kind::mixture;
  p.components = std::move(components);
  p.validate();
  return p;
}

void PriorSpec::validate() const {
  if (kind == Kind::mixture) {
    if (components.empty()) {
      throw std::invalid_argument("mixture needs at least one component");
    }
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0) || !(c.sigma > 0.0) || !std::isfinite(c.mean)) {
        throw std::invalid_argument("mixture component is not a distribution");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("mixture weights must sum to one");
    }
  } else if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("prior width must be positive and finite");
  }
}

double PriorSpec::mean() const {
  switch (kind) {
    case Kind::gaussian:
      return 0.0;
    case Kind::truncated_gaussian:
      return 0.0;  // symmetric interval around the center
    case Kind::mixture: {
      double m = 0.0;
      for (const auto& c : components) m += c.weight * c.mean;
      return m;
    }
  }
  return 0.0;
}

double PriorSpec::variance() const {
  switch (kind) {
    case Kind::gaussian:
      return sigma * sigma;
    case Kind::truncated_gaussian: {
      // Dense-grid second moment; no closed form is needed anywhere else.
      WeightedGrid g = trapezoid_grid(*this, 4096);
      return (g.weights.array() * g.points.array().square()).sum();
    }
    case Kind::mixture: {
      double second = 0.0;
      for (const auto& c : components) {
        second += c.weight * (c.mean * c.mean + c.sigma * c.sigma);
      }
      const double m = mean();
      return second - m * m;
    }
  }
  return 0.0;
}

double PriorSpec::density(double u) const {
  switch (kind) {
    case Kind::gaussian:
      return gauss_density(u, 0.0, sigma);
    case Kind::truncated_gaussian:
      if (std::abs(u) > M_PI) return 0.0;
      return gauss_density(u, 0.0, sigma) / truncation_mass(sigma);
    case Kind::mixture: {
      double d = 0.0;
      for (const auto& c : components) {
        d += c.weight * gauss_density(u, c.mean, c.sigma);
      }
      return d;
    }
  }
  return 0.0;
}

RVec sample_prior(const PriorSpec& prior, Eigen::Index n, std::uint64_t seed) {
  prior.validate();
  if (n < 0) throw std::invalid_argument("sample count must be non-negative");
  Rng rng(seed);
  RVec out(n);
  switch (prior.kind) {
    case PriorSpec::Kind::gaussian:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.normal(0.0, prior.sigma);
      break;
    case PriorSpec::Kind::truncated_gaussian:
      for (Eigen::Index i = 0; i < n; ++i) {
        double u = rng.normal(0.0, prior.sigma);
        while (std::abs(u) > M_PI) u = rng.normal(0.0, prior.sigma);
        out[i] = u;
      }
      break;
    case PriorSpec::Kind::mixture:
      for (Eigen::Index i = 0; i < n; ++i) {
        double r = rng.uniform();
        const GaussianComponent* pick = &prior.components.back();
        for (const auto& c : prior.components) {
          if (r < c.weight) {
            pick = &c;
            break;
          }
          r -= c.weight;
        }
        out[i] = rng.normal(pick->mean, pick->sigma);
      }
      break;
  }
  return out;
}

WeightedGrid evaluation_grid(const PriorSpec& prior, int quadrature_nodes,
                             int grid_points) {
  prior.validate();
  if (prior.kind == PriorSpec::Kind::truncated_gaussian) {
    return trapezoid_grid(prior, grid_points);
  }
  QuadratureRule rule = gauss_hermite(quadrature_nodes);
  const double norm = std::sqrt(M_PI);
  std::vector<GaussianComponent> comps;
  if (prior.kind == PriorSpec::Kind::gaussian) {
    comps.push_back({1.0, 0.0, prior.sigma});
  } else {
    comps = prior.components;
  }
  const int n = quadrature_nodes * static_cast<int>(comps.size());
  WeightedGrid g;
  g.points = RVec(n);
  g.weights = RVec(n);
  int at = 0;
  for (const auto& c : comps) {
    for (int i = 0; i < quadrature_nodes; ++i, ++at) {
      g.points[at] = c.mean + kSqrt2 * c.sigma * rule.nodes[i];
      g.weights[at] = c.weight * rule.weights[i] / norm;
    }
  }
  return g;
}

double expectation(const PriorSpec& prior,
                   const std::function<double(double)>& fn,
                   const ExpectationMethod& method) {
  prior.validate();
  if (std::holds_alternative<QuadratureMethod>(method)) {
    if (prior.bounded()) {
      throw std::invalid_argument(
          "quadrature does not apply to the truncated prior; use the grid or "
          "Monte Carlo method");
    }
    WeightedGrid g =
        evaluation_grid(prior, std::get<QuadratureMethod>(method).nodes, 0);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.points.size(); ++i) {
      acc += g.weights[i] * fn(g.points[i]);
    }
    return acc;
  }
  if (std::holds_alternative<GridMethod>(method)) {
    if (!prior.bounded()) {
      throw std::invalid_argument(
          "the dense grid method applies to bounded priors only");
    }
    WeightedGrid g = evaluation_grid(prior, 0, std::get<GridMethod>(method).points);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.points.size(); ++i) {
      acc += g.weights[i] * fn(g.points[i]);
    }
    return acc;
  }
  const auto& mc = std::get<MonteCarloMethod>(method);
  RVec u = sample_prior(prior, mc.samples, mc.seed);
  RVec vals(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) vals[i] = fn(u[i]);
  return pairwise_sum(vals.data(), vals.size()) / static_cast<double>(u.size());
}

}  // namespace bqi
