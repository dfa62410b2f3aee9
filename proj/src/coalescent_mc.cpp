#include "coalbg/coalescent_mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "coalbg/diffusion.hpp"
#include "coalbg/moran.hpp"

namespace coalbg::mc {

namespace {

void require_diffusion(const ModelParams& params, const char* where) {
  if (params.scale != Scale::diffusion) {
    throw std::invalid_argument(std::string(where) +
                                ": parameters must be on the continuum scale");
  }
}

void require_pair(const SampleState& state, const char* where) {
  if (!state.valid() || state.n1 + state.n2 != 2) {
    throw std::invalid_argument(std::string(where) +
                                ": initial state must hold exactly two lineages");
  }
}

}  // namespace

CoalescentRates rates(double p, const SampleState& state,
                      const ModelParams& params) {
  require_diffusion(params, "rates");
  if (!state.valid()) {
    throw std::invalid_argument("rates: invalid sample state");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("rates: frequency outside [0,1]");
  }
  if (state.n1 > 0 && !(p > 0.0)) {
    throw std::domain_error("rates: P-linked lineage stranded at frequency 0");
  }
  if (state.n2 > 0 && !(p < 1.0)) {
    throw std::domain_error("rates: Q-linked lineage stranded at frequency 1");
  }
  const double q = 1.0 - p;
  CoalescentRates out;
  if (state.n1 >= 2) {
    out.coal_pp = state.n1 * (state.n1 - 1) / 2.0 / (2.0 * p);
  }
  if (state.n2 >= 2) {
    out.coal_qq = state.n2 * (state.n2 - 1) / 2.0 / (2.0 * q);
  }
  if (p > 0.0) {
    out.migrate_p_to_q = 0.5 * (params.mu2 * q / p + params.r * q);
  }
  if (q > 0.0) {
    out.migrate_q_to_p = 0.5 * (params.mu1 * p / q + params.r * p);
  }
  return out;
}

double total_rate(const CoalescentRates& r, const SampleState& state) {
  return r.coal_pp + r.coal_qq + state.n1 * r.migrate_p_to_q +
         state.n2 * r.migrate_q_to_p;
}

namespace {

moran::Config config_of(const SampleState& state) {
  if (state.n1 == 2) return moran::Config::pp;
  if (state.n1 == 1) return moran::Config::pq;
  return moran::Config::qq;
}

bool count_feasible(moran::Config c, int j, int two_n) {
  switch (c) {
    case moran::Config::pp: return j >= 2;
    case moran::Config::pq: return j >= 1 && j <= two_n - 1;
    default: return j <= two_n - 2;
  }
}

// Engine-specific per-replicate machinery with the stationary law (or
// density) built once and shared across replicates.
class Runner {
 public:
  Runner(const ModelParams& params, const ReplicateOptions& options)
      : params_(params), opts_(options) {
    require_diffusion(params_, "simulate_coalescence");
    params_.require_positive_mutation();
    if (opts_.initial) require_pair(*opts_.initial, "simulate_coalescence");
    if (opts_.p0 && !(*opts_.p0 > 0.0 && *opts_.p0 < 1.0)) {
      throw std::invalid_argument(
          "simulate_coalescence: pinned p0 must lie strictly in (0,1)");
    }
    if (opts_.max_events < 1) {
      throw std::invalid_argument(
          "simulate_coalescence: event budget must be positive");
    }
    if (const auto* m = std::get_if<MoranEngine>(&opts_.engine)) {
      if (m->N < 2) {
        throw std::invalid_argument(
            "simulate_coalescence: exact engine needs N >= 2");
      }
      event_ = moran_event_params(params_, m->N);
      two_n_ = 2 * m->N;
      if (!opts_.p0) {
        const auto psi = moran::stationary_distribution(event_);
        cdf_.resize(psi.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < psi.size(); ++k) {
          acc += psi[k];
          cdf_[k] = acc;
        }
        cdf_.back() = 1.0;
      }
    } else {
      const auto& e = std::get<EulerEngine>(opts_.engine);
      if (!(e.dt > 0.0) || !(e.dt < 0.5)) {
        throw std::invalid_argument(
            "simulate_coalescence: Euler engine needs 0 < dt < 1/2");
      }
      if (!opts_.p0) density_.emplace(params_);
    }
  }

  GenealogyOutcome run(RngStream& rng) const {
    if (std::holds_alternative<MoranEngine>(opts_.engine)) {
      return run_exact(rng);
    }
    return run_euler(rng);
  }

 private:
  int draw_count(RngStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(it - cdf_.begin());
  }

  moran::Config draw_config(int j, RngStream& rng) const {
    const auto w = moran::pair_weights(two_n_, j);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (count_feasible(static_cast<moran::Config>(c), j, two_n_)) {
        total += w[static_cast<std::size_t>(c)];
      }
    }
    const double v = rng.uniform() * total;
    double acc = 0.0;
    moran::Config out = moran::Config::qq;
    for (int c = 0; c < 3; ++c) {
      if (!count_feasible(static_cast<moran::Config>(c), j, two_n_)) continue;
      acc += w[static_cast<std::size_t>(c)];
      out = static_cast<moran::Config>(c);
      if (v < acc) break;
    }
    return out;
  }

  GenealogyOutcome run_exact(RngStream& rng) const {
    moran::Config cfg;
    int j0;
    if (opts_.initial) {
      cfg = config_of(*opts_.initial);
      if (opts_.p0) {
        j0 = static_cast<int>(std::lround(*opts_.p0 * two_n_));
        switch (cfg) {  // clamp into the feasible count range
          case moran::Config::pp: j0 = std::max(j0, 2); break;
          case moran::Config::pq:
            j0 = std::clamp(j0, 1, two_n_ - 1);
            break;
          default: j0 = std::min(j0, two_n_ - 2); break;
        }
      } else {
        long attempts = 0;
        do {
          if (++attempts > 1000000L) {
            throw std::runtime_error(
                "simulate_coalescence: stationary draw cannot reach a "
                "feasible count");
          }
          j0 = draw_count(rng);
        } while (!count_feasible(cfg, j0, two_n_));
      }
    } else {
      j0 = opts_.p0 ? static_cast<int>(std::lround(*opts_.p0 * two_n_))
                    : draw_count(rng);
      cfg = draw_config(j0, rng);
    }
    moran::SimOptions so;
    so.max_events = opts_.max_events;
    auto out = moran::simulate_genealogy(event_, cfg, j0, rng, so);
    // event-time units -> continuum units
    out.coalescence_time /= static_cast<double>(*event_.N);
    return out;
  }

  GenealogyOutcome run_euler(RngStream& rng) const {
    const double dt = std::get<EulerEngine>(opts_.engine).dt;
    const double p0 = opts_.p0 ? *opts_.p0 : density_->sample(rng);
    SampleState st;
    if (opts_.initial) {
      st = *opts_.initial;
    } else {
      const double u = rng.uniform();
      const double q0 = 1.0 - p0;
      if (u < p0 * p0) {
        st = {2, 0};
      } else if (u < p0 * p0 + 2.0 * p0 * q0) {
        st = {1, 1};
      } else {
        st = {0, 2};
      }
    }
    GenealogyOutcome out;
    out.p0 = p0;
    out.initial = st;

    const double eps = dt;  // same reflection collar as the path simulator
    double p = p0;
    double t = 0.0;
    long migrations = 0;
    for (long step = 0; step < opts_.max_events; ++step) {
      const auto rt = rates(p, st, params_);
      const double lam = total_rate(rt, st);
      const double u = rng.uniform();
      t += dt;
      if (u < -std::expm1(-lam * dt)) {
        const double v = rng.uniform() * lam;
        const double c1 = rt.coal_pp;
        const double c2 = c1 + rt.coal_qq;
        const double c3 = c2 + st.n1 * rt.migrate_p_to_q;
        if (v < c2) {  // merged on one background
          out.coalescence_time = t;
          out.jumps = migrations;
          out.terminal_background = v < c1 ? 0 : 1;
          return out;
        }
        if (v < c3) {
          st = {st.n1 - 1, st.n2 + 1};
        } else {
          st = {st.n1 + 1, st.n2 - 1};
        }
        ++migrations;
      }
      const double z = rng.normal();
      p += diffusion::drift(params_, p) * dt +
           std::sqrt(diffusion::step_variance(p) * dt) * z;
      if (p < 0.0) p = 0.0;
      if (p > 1.0) p = 1.0;
      if (p < eps) {
        p = 2.0 * eps - p;
      } else if (p > 1.0 - eps) {
        p = 2.0 * (1.0 - eps) - p;
      }
    }
    throw std::runtime_error(
        "genealogy exceeded the step budget (" +
        std::to_string(opts_.max_events) + " steps) before coalescing");
  }

  ModelParams params_;
  ReplicateOptions opts_;
  // exact engine
  ModelParams event_;
  int two_n_ = 0;
  std::vector<double> cdf_;
  // Euler engine
  std::optional<diffusion::StationaryDensity> density_;
};

McEstimate reduce(std::vector<double> values) {
  McEstimate out;
  out.replicates = static_cast<long>(values.size());
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.value = pairwise_sum(values) / n;
  if (values.size() > 1) {
    for (auto& v : values) {
      const double d = v - out.value;
      v = d * d;
    }
    const double var = pairwise_sum(values) / (n - 1.0);
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

}  // namespace

GenealogyOutcome simulate_coalescence(const ModelParams& params,
                                      const SampleState& initial,
                                      const Engine& engine, RngStream& rng) {
  ReplicateOptions options;
  options.engine = engine;
  options.initial = initial;
  return Runner(params, options).run(rng);
}

std::vector<GenealogyOutcome> run_replicates(const ModelParams& params,
                                             long replicates,
                                             std::uint64_t seed,
                                             const ReplicateOptions& options) {
  if (replicates < 1) {
    throw std::invalid_argument("run_replicates: need at least one replicate");
  }
  const Runner runner(params, options);
  std::vector<GenealogyOutcome> out;
  out.reserve(static_cast<std::size_t>(replicates));
  for (long k = 0; k < replicates; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k));
    out.push_back(runner.run(rng));
  }
  return out;
}

McEstimate identity_from(const std::vector<GenealogyOutcome>& outcomes,
                         double nu) {
  std::vector<double> values;
  values.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    values.push_back(std::exp(-2.0 * nu * o.coalescence_time));
  }
  return reduce(std::move(values));
}

McEstimate mean_time_from(const std::vector<GenealogyOutcome>& outcomes) {
  std::vector<double> values;
  values.reserve(outcomes.size());
  for (const auto& o : outcomes) values.push_back(o.coalescence_time);
  return reduce(std::move(values));
}

McEstimate estimate_identity(const ModelParams& params,
                             const SampleState& initial, long replicates,
                             std::uint64_t seed,
                             const ReplicateOptions& options) {
  ReplicateOptions fixed = options;
  fixed.initial = initial;
  return identity_from(run_replicates(params, replicates, seed, fixed),
                       params.nu);
}

McEstimate estimate_mean_time(const ModelParams& params,
                              const SampleState& initial, long replicates,
                              std::uint64_t seed,
                              const ReplicateOptions& options) {
  ReplicateOptions fixed = options;
  fixed.initial = initial;
  return mean_time_from(run_replicates(params, replicates, seed, fixed));
}

BinnedIdentity estimate_identity_binned(const ModelParams& params,
                                        long replicates, std::uint64_t seed,
                                        const ReplicateOptions& options,
                                        int bins) {
  if (bins < 1) {
    throw std::invalid_argument("estimate_identity_binned: need bins >= 1");
  }
  const auto outcomes = run_replicates(params, replicates, seed, options);
  BinnedIdentity out;
  out.bins = bins;
  out.bin_width = 1.0 / bins;
  std::vector<std::vector<double>> per_bin(static_cast<std::size_t>(bins));
  std::vector<double> all;
  all.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    const double v = std::exp(-2.0 * params.nu * o.coalescence_time);
    const int k = std::min(bins - 1, static_cast<int>(o.p0 * bins));
    per_bin[static_cast<std::size_t>(k)].push_back(v);
    all.push_back(v);
  }
  out.by_bin.reserve(per_bin.size());
  for (auto& bin : per_bin) out.by_bin.push_back(reduce(std::move(bin)));
  out.overall = reduce(std::move(all));
  return out;
}

EmpiricalCdf empirical_cdf_of_T(const ModelParams& params,
                                const SampleState& initial, long replicates,
                                const std::vector<double>& time_grid,
                                std::uint64_t seed,
                                const ReplicateOptions& options) {
  for (std::size_t k = 0; k + 1 < time_grid.size(); ++k) {
    if (time_grid[k] > time_grid[k + 1]) {
      throw std::invalid_argument(
          "empirical_cdf_of_T: time grid must be nondecreasing");
    }
  }
  ReplicateOptions fixed = options;
  fixed.initial = initial;
  const auto outcomes = run_replicates(params, replicates, seed, fixed);
  EmpiricalCdf out;
  out.times = time_grid;
  out.replicates = static_cast<long>(outcomes.size());
  out.sorted_times.reserve(outcomes.size());
  for (const auto& o : outcomes) out.sorted_times.push_back(o.coalescence_time);
  std::sort(out.sorted_times.begin(), out.sorted_times.end());
  out.cdf.reserve(time_grid.size());
  const double n = static_cast<double>(out.sorted_times.size());
  for (const double t : time_grid) {
    const auto it = std::upper_bound(out.sorted_times.begin(),
                                     out.sorted_times.end(), t);
    out.cdf.push_back(static_cast<double>(it - out.sorted_times.begin()) / n);
  }
  return out;
}

}  // namespace coalbg::mc
