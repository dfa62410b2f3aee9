#include "coalbg/core.hpp"

#include <algorithm>
#include <cmath>

namespace coalbg {

std::string to_string(Scale s) {
  return s == Scale::diffusion ? "diffusion" : "per_generation";
}

Scale scale_from_string(const std::string& s) {
  if (s == "diffusion") return Scale::diffusion;
  if (s == "per_generation") return Scale::per_generation;
  throw std::invalid_argument("unknown scale: " + s);
}

SelectionProfile SelectionProfile::directional(double s0) {
  SelectionProfile sp;
  sp.kind = Kind::directional;
  sp.s0 = s0;
  return sp;
}

SelectionProfile SelectionProfile::balancing(double s0, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0))
    throw std::invalid_argument("balancing target must lie in (0,1)");
  SelectionProfile sp;
  sp.kind = Kind::balancing;
  sp.s0 = s0;
  sp.p0 = p0;
  return sp;
}

SelectionProfile SelectionProfile::tabulated(
    std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 2)
    throw std::invalid_argument("tabulated profile needs at least two points");
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].first > pts[i - 1].first))
      throw std::invalid_argument("tabulated abscissae must be distinct");
  if (pts.front().first != 0.0 || pts.back().first != 1.0)
    throw std::invalid_argument("tabulated profile must cover [0,1]");
  SelectionProfile sp;
  sp.kind = Kind::tabulated;
  sp.breakpoints = std::move(pts);
  return sp;
}

double SelectionProfile::operator()(double p) const {
  switch (kind) {
    case Kind::directional:
      return s0;
    case Kind::balancing:
      return s0 * (p0 - p);
    case Kind::tabulated: {
      if (p <= breakpoints.front().first) return breakpoints.front().second;
      if (p >= breakpoints.back().first) return breakpoints.back().second;
      auto hi = std::upper_bound(
          breakpoints.begin(), breakpoints.end(), p,
          [](double x, const std::pair<double, double>& bp) {
            return x < bp.first;
          });
      auto lo = hi - 1;
      double t = (p - lo->first) / (hi->first - lo->first);
      return lo->second + t * (hi->second - lo->second);
    }
  }
  return 0.0;
}

double SelectionProfile::cumulative_2s(double p) const {
  switch (kind) {
    case Kind::directional:
      return 2.0 * s0 * p;
    case Kind::balancing:
      return 2.0 * s0 * (p0 * p - 0.5 * p * p);
    case Kind::tabulated: {
      double acc = 0.0;
      double prev_x = 0.0;
      double prev_s = breakpoints.front().second;
      for (std::size_t i = 1; i < breakpoints.size() && prev_x < p; ++i) {
        double x = std::min(breakpoints[i].first, p);
        double t = (x - breakpoints[i - 1].first) /
                   (breakpoints[i].first - breakpoints[i - 1].first);
        double sx = breakpoints[i - 1].second +
                    t * (breakpoints[i].second - breakpoints[i - 1].second);
        acc += (x - prev_x) * (prev_s + sx); // 2 * trapezoid, exact on lines
        prev_x = x;
        prev_s = sx;
      }
      return acc;
    }
  }
  return 0.0;
}

double SelectionProfile::lipschitz_bound() const {
  switch (kind) {
    case Kind::directional:
      return 0.0;
    case Kind::balancing:
      return std::abs(s0);
    case Kind::tabulated: {
      double lip = 0.0;
      for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        double slope = (breakpoints[i].second - breakpoints[i - 1].second) /
                       (breakpoints[i].first - breakpoints[i - 1].first);
        lip = std::max(lip, std::abs(slope));
      }
      return lip;
    }
  }
  return 0.0;
}

SelectionProfile SelectionProfile::scaled(double factor) const {
  SelectionProfile sp = *this;
  sp.s0 *= factor;
  for (auto& bp : sp.breakpoints) bp.second *= factor;
  return sp;
}

bool SelectionProfile::is_zero() const {
  if (kind == Kind::tabulated) {
    for (const auto& bp : breakpoints)
      if (bp.second != 0.0) return false;
    return true;
  }
  return s0 == 0.0;
}

double eval_selection(const SelectionProfile& profile, double p) {
  return profile(p);
}

ModelParams to_diffusion_scale(const ModelParams& params) {
  if (params.scale == Scale::diffusion) return params;
  if (!params.N)
    throw std::invalid_argument(
        "per-generation parameters need N to change scale");
  double n = static_cast<double>(*params.N);
  ModelParams out = params;
  out.mu1 *= n;
  out.mu2 *= n;
  out.r *= n;
  out.nu *= n;
  out.selection = params.selection.scaled(n);
  out.scale = Scale::diffusion;
  return out;
}

ModelParams wf_matched_diffusion_params(const ModelParams& per_generation) {
  if (per_generation.scale != Scale::per_generation || !per_generation.N)
    throw std::invalid_argument(
        "generator matching starts from per-generation parameters with N");
  double two_n = 2.0 * static_cast<double>(*per_generation.N);
  ModelParams out = per_generation;
  out.mu1 *= two_n;
  out.mu2 *= two_n;
  out.r *= two_n;
  out.nu *= 0.5 * two_n;
  out.selection = per_generation.selection.scaled(two_n);
  out.scale = Scale::diffusion;
  out.N.reset();
  return out;
}

ModelParams moran_event_params(const ModelParams& diffusion_params, int N) {
  if (diffusion_params.scale != Scale::diffusion)
    throw std::invalid_argument("event parameters derive from diffusion scale");
  double inv = 1.0 / static_cast<double>(N);
  ModelParams out = diffusion_params;
  out.mu1 *= inv;
  out.mu2 *= inv;
  out.r *= inv;
  out.nu *= inv;
  out.selection = diffusion_params.selection.scaled(inv);
  out.N = N;
  return out;
}

FrequencyGrid FrequencyGrid::uniform(int m_interior) {
  if (m_interior < 1)
    throw std::invalid_argument("grid needs at least one interior point");
  FrequencyGrid g;
  g.interior.resize(m_interior);
  double h = 1.0 / (m_interior + 1);
  for (int i = 0; i < m_interior; ++i) g.interior[i] = (i + 1) * h;
  return g;
}

double FrequencyGrid::spacing() const {
  if (interior.empty()) throw std::logic_error("empty grid");
  double h = interior.front();
  auto close = [h](double a, double b) { return std::abs(a - b) < 1e-12 * (1.0 + h); };
  double prev = interior.front();
  for (std::size_t i = 1; i < interior.size(); ++i) {
    if (!close(interior[i] - prev, h))
      throw std::logic_error("grid is not uniform");
    prev = interior[i];
  }
  if (!close(1.0 - prev, h)) throw std::logic_error("grid is not uniform");
  return h;
}

std::vector<double> FrequencyGrid::all_points() const {
  std::vector<double> pts;
  pts.reserve(interior.size() + 2);
  pts.push_back(0.0);
  pts.insert(pts.end(), interior.begin(), interior.end());
  pts.push_back(1.0);
  return pts;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t replicate)
    : eng_(splitmix64(splitmix64(seed) ^ splitmix64(replicate * 0x9e3779b97f4a7c15ULL + 1))) {}

double RngStream::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential needs rate > 0");
  return -std::log1p(-uniform()) / rate;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

double pairwise_sum(const std::vector<double>& values) {
  // Recursive halving keeps rounding error O(log n) independent of order
  // of arrival, so estimator totals are reproducible bit-for-bit.
  struct Impl {
    static double run(const double* v, std::size_t n) {
      if (n == 0) return 0.0;
      if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
      }
      std::size_t h = n / 2;
      return run(v, h) + run(v + h, n - h);
    }
  };
  return Impl::run(values.data(), values.size());
}

}  // namespace coalbg
