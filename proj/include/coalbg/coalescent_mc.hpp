#pragma once
// Monte Carlo of the continuum-limit structured genealogy for a sample of
// two: backward jump rates driven by the selected-allele frequency, two
// interchangeable engines (the exact finite-N event chain, and an
// Euler-Maruyama path with thinned jump decisions), and seeded estimators
// for identity in state, mean coalescence time, and the coalescence-time
// CDF.  Replicate k always draws from stream (seed, k), so results are
// independent of how replicates are batched.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "coalbg/core.hpp"

namespace coalbg::mc {

// Instantaneous backward rates at frequency p for the given sample
// configuration.  Coalescence rates carry the pair-count factor; migration
// rates are per lineage.
struct CoalescentRates {
  double coal_pp = 0.0;        // same-background merge on P, C(n1,2)/(2p)
  double coal_qq = 0.0;        // same-background merge on Q, C(n2,2)/(2q)
  double migrate_p_to_q = 0.0; // per P-lineage background switch
  double migrate_q_to_p = 0.0; // per Q-lineage background switch
};

CoalescentRates rates(double p, const SampleState& state,
                      const ModelParams& params);

// Total jump intensity for the state (pair-count and lineage-count weights
// applied).
double total_rate(const CoalescentRates& r, const SampleState& state);

// Simulation engines.  The exact chain is the default everywhere; the
// Euler engine trades an O(dt) bias for speed and is cross-checked against
// the exact one.
struct MoranEngine {
  int N = 1000;
};
struct EulerEngine {
  double dt = 1e-4;
};
using Engine = std::variant<MoranEngine, EulerEngine>;

struct ReplicateOptions {
  Engine engine = MoranEngine{};
  // Pin the initial frequency (Euler: exactly; exact engine: nearest
  // feasible count).  Unset: draw from the engine's stationary law.
  std::optional<double> p0;
  // Fixed initial configuration.  Unset: label the pair by the initial
  // frequency (exact engine: a uniform pair of distinct copies).
  std::optional<SampleState> initial;
  long max_events = 1000000000L;  // per-replicate event/step budget
};

// One replicate with its own rng stream; the stationary frequency draw
// happens inside.  This is the single-replicate surface; the estimators
// below amortize the stationary-law setup across replicates.
GenealogyOutcome simulate_coalescence(const ModelParams& params,
                                      const SampleState& initial,
                                      const Engine& engine, RngStream& rng);

// All replicate outcomes for (params, options, seed); replicate k uses
// stream (seed, k).  Times are on the continuum scale.
std::vector<GenealogyOutcome> run_replicates(const ModelParams& params,
                                             long replicates,
                                             std::uint64_t seed,
                                             const ReplicateOptions& options);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long replicates = 0;
};

// Reductions over a replicate set (pairwise summation).
McEstimate identity_from(const std::vector<GenealogyOutcome>& outcomes,
                         double nu);
McEstimate mean_time_from(const std::vector<GenealogyOutcome>& outcomes);

// Mean and standard error of exp(-2 nu T) from a fixed initial
// configuration (stationary initial frequency unless pinned in options).
McEstimate estimate_identity(const ModelParams& params,
                             const SampleState& initial, long replicates,
                             std::uint64_t seed,
                             const ReplicateOptions& options = {});

McEstimate estimate_mean_time(const ModelParams& params,
                              const SampleState& initial, long replicates,
                              std::uint64_t seed,
                              const ReplicateOptions& options = {});

// Identity estimates stratified by the initial frequency into equal-width
// bins of [0,1]; bin k covers [k/bins, (k+1)/bins).  Empty bins report
// zero replicates.
struct BinnedIdentity {
  int bins = 0;
  double bin_width = 0.0;
  std::vector<McEstimate> by_bin;
  McEstimate overall;
};

BinnedIdentity estimate_identity_binned(const ModelParams& params,
                                        long replicates, std::uint64_t seed,
                                        const ReplicateOptions& options = {},
                                        int bins = 50);

// Empirical CDF of the coalescence time on a query grid, plus the sorted
// raw times so Stieltjes-type functionals of the same replicate set can be
// formed exactly.
struct EmpiricalCdf {
  std::vector<double> times;         // query grid (must be nondecreasing)
  std::vector<double> cdf;           // fraction of T <= t
  std::vector<double> sorted_times;  // all draws, ascending
  long replicates = 0;
};

EmpiricalCdf empirical_cdf_of_T(const ModelParams& params,
                                const SampleState& initial, long replicates,
                                const std::vector<double>& time_grid,
                                std::uint64_t seed,
                                const ReplicateOptions& options = {});

}  // namespace coalbg::mc
