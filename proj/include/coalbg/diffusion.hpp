#pragma once
// Continuum-limit frequency process: drift/variance coefficients, tabulated
// scale and speed functions with boundary classification, hitting
// probabilities, the stationary density as a quadrature rule with sampling,
// and an Euler path engine.

#include <vector>

#include "coalbg/core.hpp"

namespace coalbg::diffusion {

// Local drift and variance of the frequency process per unit continuum time.
struct DiffusionCoefficients {
  double drift = 0.0;     // b(p) = (s(p)p(1-p) - mu1 p + mu2 (1-p)) / 2
  double variance = 0.0;  // a(p) = p(1-p)/2
};

DiffusionCoefficients coefficients(double p, const ModelParams& params);

// Shorthands used across modules.
double drift(const ModelParams& params, double p);
double step_variance(double p);  // a(p): variance of the dt-step / dt

// Coefficient of f'' in the backward operator; equals a(p)/2 = p(1-p)/4.
double generator_second_coefficient(double p);

// Scale n and speed m tabulated on a grid refined toward both endpoints,
// anchored at the reference point c (n(c) = m(c) = 0); when the scale
// integral converges at 0 the scale is shifted so n(0) = 0 instead.
// Queries between grid points are completed by a single quadrature panel
// from the nearest node, so evaluations carry quadrature-level accuracy.
class ScaleSpeed {
 public:
  explicit ScaleSpeed(const ModelParams& params, double c = 0.5,
                      int tail_points_per_decade = 32);

  double reference_point() const { return c_; }
  bool zero_anchored() const { return zero_anchored_; }

  double scale(double x) const;  // n(x)
  double speed(double x) const;  // m(x)

  // Tabulation (ascending grid strictly inside (0,1)) for CSV export.
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& scale_table() const { return n_; }
  const std::vector<double>& speed_table() const { return m_; }

 private:
  double density_scale(double y) const;
  double density_speed(double y) const;

  ModelParams params_;
  double c_ = 0.5;
  double e_ref_ = 0.0;  // cumulative selection integral at c
  bool zero_anchored_ = false;
  std::vector<double> grid_, n_, m_;
};

ScaleSpeed scale_speed(const ModelParams& params, double c = 0.5);

// P(reach a before b | start x), a < x < b: (n(b) - n(x)) / (n(b) - n(a)).
double hitting_probability(double a, double x, double b,
                           const ScaleSpeed& scale);

// Boundary attainability, decided by the exponent of the scale density and
// cross-checked by a decade-by-decade quadrature of the attainability
// integral (speed distance from the anchor integrated against the scale
// density), whose per-decade contributions shrink geometrically exactly
// when the integral converges.
struct BoundaryReport {
  bool zero_accessible_rule = false;
  bool one_accessible_rule = false;
  bool zero_accessible_quadrature = false;
  bool one_accessible_quadrature = false;
  double zero_growth_ratio = 0.0;  // decade-12 over decade-6 contribution
  double one_growth_ratio = 0.0;
  double zero_u_estimate = 0.0;  // partial attainability integral, 12 decades
  double one_u_estimate = 0.0;

  bool consistent() const {
    return zero_accessible_rule == zero_accessible_quadrature &&
           one_accessible_rule == one_accessible_quadrature;
  }
};

bool boundary_accessible(int endpoint, const ModelParams& params);
BoundaryReport classify_boundaries(const ModelParams& params);

// Stationary density of the frequency process as a normalized quadrature
// rule, endpoint singularities absorbed by power substitutions.
class StationaryDensity {
 public:
  explicit StationaryDensity(const ModelParams& params,
                             int panels_per_side = 400);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  // Normalizing constant: density(p) = beta * exp(log_unnormalized(p)).
  double beta() const { return beta_; }
  double log_unnormalized(double p) const;  // recentred at 1/2
  double density(double p) const;

  // stationary mass carried by [lo, hi)
  double mass(double lo, double hi) const;

  // expectation of a piecewise-linear field given by (grid, values)
  double average(const std::vector<double>& grid,
                 const std::vector<double>& values) const;

  // quadrature mean of p
  double mean() const;

  // inverse-CDF draw from the tabulated cumulative
  double sample(RngStream& rng) const;

 private:
  ModelParams params_;
  double e_half_ = 0.0;
  double beta_ = 0.0;
  std::vector<double> nodes_, weights_;
  std::vector<double> sorted_nodes_, sorted_cum_;  // sampling tables
};

StationaryDensity stationary_density(const ModelParams& params);

// Euler path of the frequency process: increments drift*dt +
// noise_scale*sqrt(variance*dt)*xi, clamped into [0,1] and reflected off a
// collar of width dt at each endpoint.  Returns p at 0, dt, 2dt, ...
// Approximate engine: step bias is O(dt); the finite-N event chain is the
// exact alternative.
std::vector<double> simulate_path(const ModelParams& params, double p0,
                                  double dt, double horizon, RngStream& rng,
                                  double noise_scale = 1.0);

// p^2 f_PP + 2 p q f_PQ + q^2 f_QQ: the unconditional pair value at p.
double pair_average(double p, double f_pp, double f_pq, double f_qq);

}  // namespace coalbg::diffusion
