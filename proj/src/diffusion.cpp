#include "coalbg/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace coalbg::diffusion {

namespace {

void require_diffusion_scale(const ModelParams& params, const char* where) {
  if (params.scale != Scale::diffusion) {
    throw std::invalid_argument(std::string(where) +
                                ": parameters must be on the continuum scale");
  }
}

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr int kGaussN = 8;
constexpr double kGaussX[kGaussN] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGaussW[kGaussN] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss_panel(const F& f, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int i = 0; i < kGaussN; ++i) {
    acc += kGaussW[i] * f(mid + half * kGaussX[i]);
  }
  return half * acc;
}

// Attainability integral for one end, resolved decade by decade: the speed
// distance from the anchor integrated against the scale density.  `flip`
// selects the end near 1 via y -> 1 - y.  Returns contributions of decades
// 1..12 below the anchor 1/2.
std::vector<double> decade_contributions(const ModelParams& params,
                                         bool flip) {
  const double e_half = params.selection.cumulative_2s(0.5);
  const auto np = [&](double z) {
    const double y = flip ? 1.0 - z : z;
    const double e = params.selection.cumulative_2s(y) - e_half;
    return std::exp(-e) * std::pow(y, -2.0 * params.mu2) *
           std::pow(1.0 - y, -2.0 * params.mu1);
  };
  const auto mp = [&](double z) {
    const double y = flip ? 1.0 - z : z;
    const double e = params.selection.cumulative_2s(y) - e_half;
    return 4.0 / (y * (1.0 - y)) * std::exp(e) *
           std::pow(y, 2.0 * params.mu2) * std::pow(1.0 - y, 2.0 * params.mu1);
  };

  constexpr int kDecades = 12;
  constexpr int kSub = 32;
  std::vector<double> contrib(kDecades, 0.0);
  double m_tail = 0.0;  // accumulated speed mass from the anchor inward
  for (int d = 1; d <= kDecades; ++d) {
    const double outer = 0.5 * std::pow(10.0, -(d - 1));
    const double inner = 0.5 * std::pow(10.0, -d);
    const double ratio = std::pow(inner / outer, 1.0 / kSub);
    double hi = outer;
    double sum = 0.0;
    for (int k = 0; k < kSub; ++k) {
      const double lo = (k + 1 == kSub) ? inner : hi * ratio;
      const double dm = gauss_panel(mp, lo, hi);
      const double dn = gauss_panel(np, lo, hi);
      sum += (m_tail + 0.5 * dm) * dn;
      m_tail += dm;
      hi = lo;
    }
    contrib[static_cast<std::size_t>(d - 1)] = sum;
  }
  return contrib;
}

}  // namespace

DiffusionCoefficients coefficients(double p, const ModelParams& params) {
  require_diffusion_scale(params, "coefficients");
  const double q = 1.0 - p;
  DiffusionCoefficients out;
  out.drift =
      0.5 * (params.selection(p) * p * q - params.mu1 * p + params.mu2 * q);
  out.variance = 0.5 * p * q;
  return out;
}

double drift(const ModelParams& params, double p) {
  return coefficients(p, params).drift;
}

double step_variance(double p) { return 0.5 * p * (1.0 - p); }

double generator_second_coefficient(double p) { return 0.25 * p * (1.0 - p); }

double ScaleSpeed::density_scale(double y) const {
  const double e = params_.selection.cumulative_2s(y) - e_ref_;
  return std::exp(-e) * std::pow(y, -2.0 * params_.mu2) *
         std::pow(1.0 - y, -2.0 * params_.mu1);
}

double ScaleSpeed::density_speed(double y) const {
  const double e = params_.selection.cumulative_2s(y) - e_ref_;
  return 4.0 / (y * (1.0 - y)) * std::exp(e) *
         std::pow(y, 2.0 * params_.mu2) * std::pow(1.0 - y, 2.0 * params_.mu1);
}

ScaleSpeed::ScaleSpeed(const ModelParams& params, double c,
                       int tail_points_per_decade)
    : params_(params), c_(c) {
  require_diffusion_scale(params, "ScaleSpeed");
  if (!(c > 0.0 && c < 1.0)) {
    throw std::invalid_argument("ScaleSpeed: reference point must be in (0,1)");
  }
  if (params.mu1 < 0.0 || params.mu2 < 0.0) {
    throw std::invalid_argument("ScaleSpeed: mutation rates must be >= 0");
  }
  if (tail_points_per_decade < 4) {
    throw std::invalid_argument("ScaleSpeed: need >= 4 tail points per decade");
  }
  e_ref_ = params.selection.cumulative_2s(c);

  // Grid: geometric tails over six decades at each end, uniform bulk.
  constexpr double kEdge = 1e-8;
  constexpr double kBulkLo = 1e-2;
  constexpr int kDecades = 6;
  const int tail_n = kDecades * tail_points_per_decade;
  grid_.reserve(static_cast<std::size_t>(2 * tail_n + 990));
  for (int k = 0; k <= tail_n; ++k) {
    grid_.push_back(kEdge *
                    std::pow(10.0, static_cast<double>(k) /
                                       tail_points_per_decade));
  }
  for (int j = 1; j < 980; ++j) grid_.push_back(kBulkLo + j * 1e-3);
  for (int k = tail_n; k >= 0; --k) {
    grid_.push_back(1.0 - kEdge * std::pow(10.0, static_cast<double>(k) /
                                                     tail_points_per_decade));
  }
  grid_.push_back(c);
  std::sort(grid_.begin(), grid_.end());
  grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());

  // Cumulative integrals anchored at c, built outward panel by panel.
  const std::size_t nn = grid_.size();
  n_.assign(nn, 0.0);
  m_.assign(nn, 0.0);
  const std::size_t ic = static_cast<std::size_t>(
      std::lower_bound(grid_.begin(), grid_.end(), c) - grid_.begin());
  const auto np = [this](double y) { return density_scale(y); };
  const auto mp = [this](double y) { return density_speed(y); };
  for (std::size_t i = ic + 1; i < nn; ++i) {
    n_[i] = n_[i - 1] + gauss_panel(np, grid_[i - 1], grid_[i]);
    m_[i] = m_[i - 1] + gauss_panel(mp, grid_[i - 1], grid_[i]);
  }
  for (std::size_t i = ic; i-- > 0;) {
    n_[i] = n_[i + 1] - gauss_panel(np, grid_[i], grid_[i + 1]);
    m_[i] = m_[i + 1] - gauss_panel(mp, grid_[i], grid_[i + 1]);
  }

  // When the scale integral converges at 0 (scale-density exponent > -1),
  // shift so n(0) = 0.  The remaining tail below the grid is integrated
  // with the power substitution u = y^(1 - 2 mu2), which removes the
  // endpoint singularity exactly for the pure power part.
  if (2.0 * params_.mu2 < 1.0) {
    const double pow_exp = 1.0 - 2.0 * params_.mu2;
    const auto g = [&](double u) {
      const double y = std::pow(u, 1.0 / pow_exp);
      const double e = params_.selection.cumulative_2s(y) - e_ref_;
      return std::exp(-e) * std::pow(1.0 - y, -2.0 * params_.mu1) / pow_exp;
    };
    const double u_hi = std::pow(grid_.front(), pow_exp);
    double tail = 0.0;
    for (int k = 0; k < 8; ++k) {
      tail += gauss_panel(g, u_hi * k / 8.0, u_hi * (k + 1) / 8.0);
    }
    const double n_zero = n_.front() - tail;
    for (double& v : n_) v -= n_zero;
    zero_anchored_ = true;
  }

  for (std::size_t i = 1; i < nn; ++i) {
    if (!(n_[i] > n_[i - 1]) || !(m_[i] > m_[i - 1])) {
      throw std::runtime_error("ScaleSpeed: tabulation not strictly increasing");
    }
  }
}

namespace {

template <typename F>
double tabulated_query(const std::vector<double>& grid,
                       const std::vector<double>& table, double x,
                       const char* what, const F& density) {
  if (!(x >= grid.front() && x <= grid.back())) {
    throw std::domain_error(std::string(what) +
                            ": query outside the tabulated range");
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double mid = 0.5 * (grid[i] + x);
  const double half = 0.5 * (x - grid[i]);
  double acc = 0.0;
  for (int k = 0; k < kGaussN; ++k) {
    acc += kGaussW[k] * density(mid + half * kGaussX[k]);
  }
  return table[i] + half * acc;
}

}  // namespace

double ScaleSpeed::scale(double x) const {
  return tabulated_query(grid_, n_, x, "ScaleSpeed::scale",
                         [this](double y) { return density_scale(y); });
}

double ScaleSpeed::speed(double x) const {
  return tabulated_query(grid_, m_, x, "ScaleSpeed::speed",
                         [this](double y) { return density_speed(y); });
}

ScaleSpeed scale_speed(const ModelParams& params, double c) {
  return ScaleSpeed(params, c);
}

double hitting_probability(double a, double x, double b,
                           const ScaleSpeed& scale) {
  if (!(0.0 < a && a < x && x < b && b < 1.0)) {
    throw std::invalid_argument("hitting_probability: need 0 < a < x < b < 1");
  }
  const double na = scale.scale(a);
  const double nx = scale.scale(x);
  const double nb = scale.scale(b);
  return (nb - nx) / (nb - na);
}

bool boundary_accessible(int endpoint, const ModelParams& params) {
  require_diffusion_scale(params, "boundary_accessible");
  params.require_positive_mutation();
  if (endpoint == 0) return 2.0 * params.mu2 < 1.0;
  if (endpoint == 1) return 2.0 * params.mu1 < 1.0;
  throw std::invalid_argument("boundary_accessible: endpoint must be 0 or 1");
}

BoundaryReport classify_boundaries(const ModelParams& params) {
  require_diffusion_scale(params, "classify_boundaries");
  params.require_positive_mutation();

  BoundaryReport report;
  report.zero_accessible_rule = boundary_accessible(0, params);
  report.one_accessible_rule = boundary_accessible(1, params);

  const auto zero = decade_contributions(params, false);
  const auto one = decade_contributions(params, true);
  // Convergent integrals have geometrically shrinking decade contributions;
  // divergent ones hold steady or grow.  Compare decade 12 against decade 6.
  report.zero_growth_ratio = zero[11] / zero[5];
  report.one_growth_ratio = one[11] / one[5];
  report.zero_accessible_quadrature = report.zero_growth_ratio < 0.5;
  report.one_accessible_quadrature = report.one_growth_ratio < 0.5;
  report.zero_u_estimate = std::accumulate(zero.begin(), zero.end(), 0.0);
  report.one_u_estimate = std::accumulate(one.begin(), one.end(), 0.0);
  return report;
}

StationaryDensity::StationaryDensity(const ModelParams& params,
                                     int panels_per_side)
    : params_(params) {
  require_diffusion_scale(params, "StationaryDensity");
  params.require_positive_mutation();
  if (panels_per_side < 1) {
    throw std::invalid_argument("StationaryDensity: need at least one panel");
  }
  e_half_ = params.selection.cumulative_2s(0.5);

  const double a2 = 2.0 * params.mu2;
  const double a1 = 2.0 * params.mu1;
  nodes_.reserve(static_cast<std::size_t>(2 * panels_per_side * kGaussN));
  weights_.reserve(nodes_.capacity());

  // Left half: substitute u = p^{2 mu2} so the p -> 0 singularity is
  // absorbed; the node is p = u^{1/(2 mu2)}.
  const double u_left = std::pow(0.5, a2);
  for (int k = 0; k < panels_per_side; ++k) {
    const double u0 = u_left * k / panels_per_side;
    const double u1 = u_left * (k + 1) / panels_per_side;
    const double mid = 0.5 * (u0 + u1);
    const double half = 0.5 * (u1 - u0);
    for (int i = 0; i < kGaussN; ++i) {
      const double u = mid + half * kGaussX[i];
      const double p = std::pow(u, 1.0 / a2);
      const double w = half * kGaussW[i] * (1.0 / a2) *
                       std::pow(1.0 - p, a1 - 1.0) *
                       std::exp(params.selection.cumulative_2s(p) - e_half_);
      nodes_.push_back(p);
      weights_.push_back(w);
    }
  }

  // Right half: substitute u = (1-p)^{2 mu1}.
  const double u_right = std::pow(0.5, a1);
  for (int k = 0; k < panels_per_side; ++k) {
    const double u0 = u_right * k / panels_per_side;
    const double u1 = u_right * (k + 1) / panels_per_side;
    const double mid = 0.5 * (u0 + u1);
    const double half = 0.5 * (u1 - u0);
    for (int i = 0; i < kGaussN; ++i) {
      const double u = mid + half * kGaussX[i];
      const double p = 1.0 - std::pow(u, 1.0 / a1);
      const double w = half * kGaussW[i] * (1.0 / a1) *
                       std::pow(p, a2 - 1.0) *
                       std::exp(params.selection.cumulative_2s(p) - e_half_);
      nodes_.push_back(p);
      weights_.push_back(w);
    }
  }

  // Under weak mutation the endpoint substitutions place nodes so close to
  // a boundary that the final subtraction rounds onto it; every consumer of
  // the support (sampling included) requires frequencies strictly inside
  // (0, 1), so fold such nodes back to the nearest representable neighbour.
  for (double& p : nodes_) {
    p = std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  }

  const double total = pairwise_sum(weights_);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::runtime_error("StationaryDensity: quadrature mass not positive");
  }
  beta_ = 1.0 / total;
  for (double& w : weights_) w /= total;

  // Sampling tables: nodes in ascending order with cumulative weights.
  std::vector<std::size_t> order(nodes_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    return nodes_[a] < nodes_[b];
  });
  sorted_nodes_.resize(nodes_.size());
  sorted_cum_.resize(nodes_.size());
  double cum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted_nodes_[k] = nodes_[order[k]];
    cum += weights_[order[k]];
    sorted_cum_[k] = cum;
  }
  sorted_cum_.back() = 1.0;
}

double StationaryDensity::log_unnormalized(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(
        "StationaryDensity::log_unnormalized: p must lie in (0,1)");
  }
  return (2.0 * params_.mu2 - 1.0) * std::log(p) +
         (2.0 * params_.mu1 - 1.0) * std::log1p(-p) +
         params_.selection.cumulative_2s(p) - e_half_;
}

double StationaryDensity::density(double p) const {
  return beta_ * std::exp(log_unnormalized(p));
}

double StationaryDensity::mass(double lo, double hi) const {
  std::vector<double> parts;
  parts.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] >= lo && nodes_[i] < hi) parts.push_back(weights_[i]);
  }
  return pairwise_sum(parts);
}

double StationaryDensity::average(const std::vector<double>& grid,
                                  const std::vector<double>& values) const {
  if (grid.size() < 2 || grid.size() != values.size()) {
    throw std::invalid_argument(
        "StationaryDensity::average: need matching grid/values, length >= 2");
  }
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument(
        "StationaryDensity::average: grid must be ascending");
  }
  std::vector<double> parts(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double p = nodes_[i];
    double v;
    if (p <= grid.front()) {
      v = values.front();
    } else if (p >= grid.back()) {
      v = values.back();
    } else {
      const auto it = std::upper_bound(grid.begin(), grid.end(), p);
      const std::size_t j = static_cast<std::size_t>(it - grid.begin());
      const double t = (p - grid[j - 1]) / (grid[j] - grid[j - 1]);
      v = values[j - 1] + t * (values[j] - values[j - 1]);
    }
    parts[i] = weights_[i] * v;
  }
  return pairwise_sum(parts);
}

double StationaryDensity::mean() const {
  std::vector<double> parts(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    parts[i] = weights_[i] * nodes_[i];
  }
  return pairwise_sum(parts);
}

double StationaryDensity::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it =
      std::lower_bound(sorted_cum_.begin(), sorted_cum_.end(), u);
  const std::size_t i = std::min(
      static_cast<std::size_t>(it - sorted_cum_.begin()),
      sorted_cum_.size() - 1);
  if (i == 0) return sorted_nodes_.front();
  // Smear each node's weight uniformly over the gap to its predecessor.
  const double w = sorted_cum_[i] - sorted_cum_[i - 1];
  if (w <= 0.0) return sorted_nodes_[i];
  const double t = (u - sorted_cum_[i - 1]) / w;
  return sorted_nodes_[i - 1] + t * (sorted_nodes_[i] - sorted_nodes_[i - 1]);
}

StationaryDensity stationary_density(const ModelParams& params) {
  return StationaryDensity(params);
}

std::vector<double> simulate_path(const ModelParams& params, double p0,
                                  double dt, double horizon, RngStream& rng,
                                  double noise_scale) {
  require_diffusion_scale(params, "simulate_path");
  if (!(dt > 0.0) || !(dt < 0.5)) {
    throw std::invalid_argument("simulate_path: need 0 < dt < 1/2");
  }
  if (!(p0 >= 0.0 && p0 <= 1.0)) {
    throw std::invalid_argument("simulate_path: p0 must lie in [0,1]");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const double eps = dt;  // reflection collar at each endpoint
  std::vector<double> path;
  path.reserve(steps + 1);
  path.push_back(p0);
  double p = p0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double q = 1.0 - p;
    const double b =
        0.5 * (params.selection(p) * p * q - params.mu1 * p + params.mu2 * q);
    p += b * dt + noise_scale * std::sqrt(0.5 * p * q * dt) * rng.normal();
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    if (p < eps) {
      p = 2.0 * eps - p;
    } else if (p > 1.0 - eps) {
      p = 2.0 * (1.0 - eps) - p;
    }
    path.push_back(p);
  }
  return path;
}

double pair_average(double p, double f_pp, double f_pq, double f_qq) {
  const double q = 1.0 - p;
  return p * p * f_pp + 2.0 * p * q * f_pq + q * q * f_qq;
}

}  // namespace coalbg::diffusion
