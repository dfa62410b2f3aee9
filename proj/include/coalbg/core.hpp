#pragma once
// Shared parameter types, selection profiles, grids, and deterministic
// random-stream contracts used by every other module.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coalbg {

inline constexpr const char* kVersion = "coalbg 0.1.0";

enum class Scale { diffusion, per_generation };

std::string to_string(Scale s);
Scale scale_from_string(const std::string& s);

// s(p): directional constant, linear push toward an interior target
// frequency, or a tabulated piecewise-linear (hence Lipschitz) function.
struct SelectionProfile {
  enum class Kind { directional, balancing, tabulated };
  Kind kind = Kind::directional;
  double s0 = 0.0;
  double p0 = 0.5;                                   // balancing only
  std::vector<std::pair<double, double>> breakpoints; // tabulated only

  static SelectionProfile directional(double s0);
  static SelectionProfile balancing(double s0, double p0);
  static SelectionProfile tabulated(std::vector<std::pair<double, double>> pts);

  double operator()(double p) const;
  // \int_0^p 2 s(y) dy, exact per variant (used by scale/speed and the
  // stationary density).
  double cumulative_2s(double p) const;
  double lipschitz_bound() const;
  SelectionProfile scaled(double factor) const;
  bool is_zero() const;
};

double eval_selection(const SelectionProfile& profile, double p);

struct ModelParams {
  double mu1 = 0.0; // forward P->Q mutation rate
  double mu2 = 0.0; // forward Q->P mutation rate
  double r = 0.0;   // recombination rate
  double nu = 0.0;  // neutral-locus mutation rate
  SelectionProfile selection;
  std::optional<int> N; // diploid size; absent for pure-diffusion work
  Scale scale = Scale::diffusion;

  void require_positive_mutation() const {
    if (!(mu1 > 0.0) || !(mu2 > 0.0))
      throw std::invalid_argument("mu1 and mu2 must be strictly positive");
  }
};

// Uniform x N on every rate and on the selection profile; idempotent on
// diffusion-scale inputs.  This is the declared unit change of the public
// parameter surface.
ModelParams to_diffusion_scale(const ModelParams& params);

// Diffusion-scale parameters whose generator matches the per-generation
// finite-N model: mu1, mu2, r and selection pick up a factor 2N, the
// neutral-locus rate a factor N.  This is the bridge used whenever a
// finite-N identity vector is compared against the continuum solver.
ModelParams wf_matched_diffusion_params(const ModelParams& per_generation);

// Per-event parameters for the finite-N continuous-time chain that
// reproduces the given diffusion-scale model: everything divided by N.
// Chain time divided by N is diffusion time.
ModelParams moran_event_params(const ModelParams& diffusion_params, int N);

// Lineage counts of the two-lineage sample by background.
struct SampleState {
  int n1 = 0; // lineages linked to P
  int n2 = 0; // lineages linked to Q
  bool valid() const {
    return n1 >= 0 && n2 >= 0 && (n1 + n2 == 1 || n1 + n2 == 2);
  }
};

// Strictly increasing interior points in (0,1); the two endpoints are
// carried separately.
struct FrequencyGrid {
  std::vector<double> interior;

  static FrequencyGrid uniform(int m_interior);
  int size() const { return static_cast<int>(interior.size()); }
  double spacing() const; // throws if non-uniform
  // 0, interior..., 1
  std::vector<double> all_points() const;
};

// One Monte Carlo replicate of a two-lineage genealogy.
struct GenealogyOutcome {
  double coalescence_time = 0.0; // units in which params.nu is a rate
  long jumps = 0;
  int terminal_background = 0; // 0 = P, 1 = Q
  double p0 = 0.0;
  SampleState initial;
};

// Deterministic per-replicate random stream: a 64-bit mix of
// (seed, replicate) seeds the engine, so replicate k's draws are
// bit-identical no matter how replicates are distributed across workers.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t replicate);
  double uniform();                 // (0,1), 53-bit
  double exponential(double rate);  // rate > 0
  double normal();                  // standard, polar method
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Order-stable reduction: pairwise summation of a value vector.
double pairwise_sum(const std::vector<double>& values);

}  // namespace coalbg
