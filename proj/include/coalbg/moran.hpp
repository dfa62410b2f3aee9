#pragma once
// Exact finite-N overlapping-generation model: one-step jump probabilities
// of the selected-allele count, its reversible stationary law, the backward
// generator of a two-lineage sample, exact resolvents (identity in state and
// mean coalescence time), and event-driven genealogy simulation.

#include <Eigen/Dense>
#include <array>

#include "coalbg/core.hpp"

namespace coalbg::moran {

// One replacement event at count j: probability the count moves down / up.
struct JumpProbs {
  double down = 0.0;
  double up = 0.0;
};

JumpProbs jump_probs(const ModelParams& event, int j);
// The explicit no-move probability; equals 1 - down - up identically.
double stay_probability(const ModelParams& event, int j);

// Stationary law from the birth-death balance, accumulated in log space.
std::vector<double> stationary_distribution(const ModelParams& event);

// One-event forward transition matrix (tridiagonal), for cross-checks.
Eigen::MatrixXd transition_matrix(const ModelParams& event);

// max_j |psi_j up_j - psi_{j+1} down_{j+1}|
double detailed_balance_violation(const ModelParams& event);

enum class Config { pp = 0, pq = 1, qq = 2 };

inline SampleState config_state(Config c) {
  switch (c) {
    case Config::pp: return {2, 0};
    case Config::pq: return {1, 1};
    default: return {0, 2};
  }
}

// Backward-in-time generator of (allele count, lineage backgrounds) for a
// sample of two, in event time units.  Rates into states where a lineage
// would sit on an extinct background are rerouted to the forced migration
// target, so every transition lands on a feasible state or a coalescence.
class BackwardGenerator {
 public:
  struct Transition {
    double rate = 0.0;
    bool coalesced = false;
    int terminal = 0;  // background of the merged lineage (0=P,1=Q)
    Config next_config = Config::pp;  // meaningful when not coalesced
    int next_j = 0;                   // count after the event, always set
    bool migration = false;  // background change of one lineage
  };

  explicit BackwardGenerator(const ModelParams& event);

  int two_n() const { return two_n_; }
  bool feasible(Config c, int j) const;
  const std::vector<Transition>& transitions(Config c, int j) const;
  double total_rate(Config c, int j) const;

 private:
  int two_n_;
  std::array<std::vector<std::vector<Transition>>, 3> table_;
  std::array<std::vector<double>, 3> total_;
};

// Per-background-pair conditional values on the count lattice; slots whose
// state cannot hold the required pair are NaN except for the single-copy
// convention noted on each solver.
struct ConditionalField {
  int two_n = 0;
  std::array<std::vector<double>, 3> value;  // [config][j]

  double at(Config c, int j) const { return value[static_cast<int>(c)][j]; }
  bool feasible(Config c, int j) const {
    switch (c) {
      case Config::pp: return j >= 2;
      case Config::pq: return j >= 1 && j <= two_n - 1;
      default: return j <= two_n - 2;
    }
  }
};

// E[exp(-2 nu T)] from every feasible state, nu and T both in event units.
// Single-copy slots (PP at j=1, QQ at j=2N-1) are set to 1: a pair forced
// onto one copy has already coalesced.
ConditionalField identity_resolvent(const ModelParams& event);

// E[T] in event time units; single-copy slots are 0 by the same convention.
ConditionalField mean_time_resolvent(const ModelParams& event);

// Probability that a uniformly drawn pair of distinct copies is PP/PQ/QQ
// at count j.
std::array<double, 3> pair_weights(int two_n, int j);

// Label-blind stationary averages over (count, random distinct pair).
double average_identity(const ModelParams& event);
double average_mean_time(const ModelParams& event);  // event units

struct SimOptions {
  long max_events = 1000000000L;
};

// Event-driven simulation from a fixed feasible state.
GenealogyOutcome simulate_genealogy(const ModelParams& event, Config init,
                                    int j0, RngStream& rng,
                                    const SimOptions& opts = {});

// Draw the count from the stationary law and the pair as two distinct
// copies, then simulate.
GenealogyOutcome simulate_stationary_genealogy(const ModelParams& event,
                                               RngStream& rng,
                                               const SimOptions& opts = {});

}  // namespace coalbg::moran
