#include "coalbg/checks.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "coalbg/coalescent_mc.hpp"
#include "coalbg/core.hpp"
#include "coalbg/diffusion.hpp"
#include "coalbg/identity_ode.hpp"
#include "coalbg/moran.hpp"
#include "coalbg/report.hpp"
#include "coalbg/wf_exact.hpp"

namespace coalbg::checks {

namespace {

ModelParams diffusion_bench(double mu1, double mu2, double r, double nu,
                            SelectionProfile selection) {
  ModelParams p;
  p.scale = Scale::diffusion;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.r = r;
  p.nu = nu;
  p.selection = std::move(selection);
  return p;
}

// Symmetric mutation at 0.025, neutral-locus rate 0.1, no recombination,
// balancing push of strength 0.16 toward one half.
ModelParams balanced_bench(double s0 = 0.16) {
  return diffusion_bench(0.025, 0.025, 0.0, 0.1,
                         SelectionProfile::balancing(s0, 0.5));
}

ModelParams neutral_bench() {
  return diffusion_bench(0.025, 0.025, 0.0, 0.1,
                         SelectionProfile::directional(0.0));
}

// Finite-N discrete-generation parameters whose continuum image is the
// balanced benchmark above with mu = 0.05, push strength 16, neutral rate
// 0.1 -- the same continuum target at every N.
ModelParams matched_per_generation(int n_diploid) {
  ModelParams p;
  p.scale = Scale::per_generation;
  p.N = n_diploid;
  const double two_n = 2.0 * n_diploid;
  p.mu1 = 0.05 / two_n;
  p.mu2 = 0.05 / two_n;
  p.r = 0.0;
  p.nu = 0.1 / n_diploid;
  p.selection = SelectionProfile::balancing(16.0 / two_n, 0.5);
  return p;
}

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

double averaged_fbar(const ModelParams& params, int m_interior) {
  const auto field =
      ode::solve_direct(params, FrequencyGrid::uniform(m_interior));
  const diffusion::StationaryDensity density(params);
  return ode::average_over_stationarity(field.points, field.fbar, density);
}

std::string joined(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

}  // namespace

CheckRow make_row(int criterion, std::string name, double measured,
                  char relation, double threshold, std::string note) {
  CheckRow row;
  row.criterion = criterion;
  row.name = std::move(name);
  row.measured = measured;
  row.threshold = threshold;
  row.relation = relation;
  switch (relation) {
    case '<': row.pass = measured < threshold; break;
    case '>': row.pass = measured > threshold; break;
    case '=': row.pass = measured <= threshold; break;
    default: throw std::invalid_argument("make_row: unknown relation");
  }
  row.note = std::move(note);
  return row;
}

namespace {

// --- criterion 1: finite-N fixed point vs continuum solver at the
// figure-one parameters, with the gap shrinking as N doubles. -------------
std::vector<CheckRow> criterion1() {
  const auto start = std::chrono::steady_clock::now();
  const int m_interior = 799;  // closed lattice of 801 points, h = 1/800
  std::vector<CheckRow> rows;
  std::array<double, 2> worst{0.0, 0.0};
  const std::array<int, 2> sizes{50, 100};
  for (std::size_t which = 0; which < sizes.size(); ++which) {
    const int n_diploid = sizes[which];
    const int two_n = 2 * n_diploid;
    const auto per_gen = matched_per_generation(n_diploid);
    const auto fixed = wf::identity_fixed_point(per_gen);
    const auto field = ode::solve_direct(wf_matched_diffusion_params(per_gen),
                                         FrequencyGrid::uniform(m_interior));
    const int stride = (m_interior + 1) / two_n;
    if (stride * two_n != m_interior + 1) {
      throw std::logic_error("criterion1: lattice does not align");
    }
    // Slots holding a genuine pair: two copies of the required background.
    double sup_pp = 0.0, sup_pq = 0.0, sup_qq = 0.0;
    for (int j = 2; j <= two_n; ++j) {
      sup_pp = std::max(sup_pp,
                        std::abs(field.f_pp[j * stride] - fixed.f_pp[j]));
    }
    for (int j = 1; j <= two_n - 1; ++j) {
      sup_pq = std::max(sup_pq,
                        std::abs(field.f_pq[j * stride] - fixed.f_pq[j]));
    }
    for (int j = 0; j <= two_n - 2; ++j) {
      sup_qq = std::max(sup_qq,
                        std::abs(field.f_qq[j * stride] - fixed.f_qq[j]));
    }
    worst[which] = std::max({sup_pp, sup_pq, sup_qq});
    if (which == 0) {
      rows.push_back(make_row(1, "sup_pp_n50", sup_pp, '=', 0.02));
      rows.push_back(make_row(1, "sup_pq_n50", sup_pq, '=', 0.02));
      rows.push_back(make_row(1, "sup_qq_n50", sup_qq, '=', 0.02));
    }
  }
  rows.push_back(make_row(1, "gap_shrinks_at_n100", worst[1] - worst[0], '<',
                          0.0,
                          "sup " + report::format_value(worst[0]) + " -> " +
                              report::format_value(worst[1])));
  CheckRow runtime = make_row(1, "runtime_seconds", seconds_since(start),
                              '<', 60.0);
  runtime.timing = true;
  rows.push_back(runtime);
  return rows;
}

// --- criterion 2: stationarity-averaged identity under neutrality hits
// the closed form by both routes. ------------------------------------------
std::vector<CheckRow> criterion2(std::uint64_t seed) {
  const auto params = neutral_bench();
  const double target = 1.0 / 1.4;
  std::vector<CheckRow> rows;
  const double avg = averaged_fbar(params, 400);
  rows.push_back(make_row(2, "solver_avg_error", std::abs(avg - target), '=',
                          2e-3, "avg " + report::format_value(avg)));
  mc::ReplicateOptions options;
  options.engine = mc::MoranEngine{25};
  const auto outcomes = mc::run_replicates(params, 100000, seed, options);
  const auto est = mc::identity_from(outcomes, params.nu);
  rows.push_back(make_row(
      2, "simulation_avg_error", std::abs(est.value - target), '<',
      3.0 * est.std_error,
      "estimate " + report::format_value(est.value) + " se " +
          report::format_value(est.std_error) + " at 100000 replicates"));
  return rows;
}

// --- criterion 3: the per-event chain's backward rates, compressed by the
// chain-to-continuum time change, approach the continuum rate functions at
// speed 1/N. ----------------------------------------------------------------
std::vector<CheckRow> criterion3() {
  const auto bench = diffusion_bench(
      0.03, 0.02, 0.04, 0.1, SelectionProfile::balancing(0.2, 0.45));
  const std::array<double, 5> points{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::array<int, 3> sizes{100, 1000, 10000};
  std::array<std::array<double, 3>, 5> errors{};
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    const int n_diploid = sizes[ni];
    const int two_n = 2 * n_diploid;
    const moran::BackwardGenerator gen(
        moran_event_params(bench, n_diploid));
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      const double p = points[pi];
      const int j = static_cast<int>(std::lround(p * two_n));
      const double scale = static_cast<double>(n_diploid);

      double coal_pp = 0.0, mig_pp = 0.0;
      for (const auto& t : gen.transitions(moran::Config::pp, j)) {
        if (t.coalesced) coal_pp += t.rate;
        else if (t.migration) mig_pp += t.rate;
      }
      double coal_qq = 0.0, mig_qq = 0.0;
      for (const auto& t : gen.transitions(moran::Config::qq, j)) {
        if (t.coalesced) coal_qq += t.rate;
        else if (t.migration) mig_qq += t.rate;
      }
      double drift = 0.0, second = 0.0;
      for (const auto& t : gen.transitions(moran::Config::pq, j)) {
        const double dp =
            static_cast<double>(t.next_j - j) / static_cast<double>(two_n);
        drift += t.rate * dp;
        second += t.rate * dp * dp;
      }

      const auto lim_pp = mc::rates(p, SampleState{2, 0}, bench);
      const auto lim_qq = mc::rates(p, SampleState{0, 2}, bench);
      double err = 0.0;
      err += std::abs(scale * coal_pp - lim_pp.coal_pp);
      err += std::abs(scale * mig_pp / 2.0 - lim_pp.migrate_p_to_q);
      err += std::abs(scale * coal_qq - lim_qq.coal_qq);
      err += std::abs(scale * mig_qq / 2.0 - lim_qq.migrate_q_to_p);
      err += std::abs(scale * drift - diffusion::drift(bench, p));
      err += std::abs(scale * second - diffusion::step_variance(p));
      errors[pi][ni] = err;
    }
  }
  std::vector<CheckRow> rows;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    // Least-squares slope of log error against log size.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
      const double x = std::log(static_cast<double>(sizes[ni]));
      const double y = std::log(errors[pi][ni]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = static_cast<double>(sizes.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    std::ostringstream name;
    name << "rate_slope_at_p" << points[pi];
    rows.push_back(make_row(3, name.str(), std::abs(slope + 1.0), '=', 0.2,
                            "slope " + report::format_value(slope)));
  }
  return rows;
}

// --- criterion 4: one-event move probabilities are a partition of unity
// across random parameter draws. --------------------------------------------
std::vector<CheckRow> criterion4(std::uint64_t seed) {
  RngStream rng(seed, 4);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    ModelParams p;
    p.scale = Scale::diffusion;
    p.N = 2 + static_cast<int>(rng.raw() % 99);
    p.mu1 = 1e-4 + 0.01 * rng.uniform();
    p.mu2 = 1e-4 + 0.01 * rng.uniform();
    p.r = 0.01 * rng.uniform();
    switch (k % 3) {
      case 0:
        p.selection =
            SelectionProfile::directional(0.04 * (rng.uniform() - 0.5));
        break;
      case 1:
        p.selection = SelectionProfile::balancing(
            0.04 * (rng.uniform() - 0.5), 0.1 + 0.8 * rng.uniform());
        break;
      default:
        p.selection = SelectionProfile::tabulated(
            {{0.0, 0.04 * (rng.uniform() - 0.5)},
             {0.5, 0.04 * (rng.uniform() - 0.5)},
             {1.0, 0.04 * (rng.uniform() - 0.5)}});
        break;
    }
    const int two_n = 2 * *p.N;
    const int j = static_cast<int>(rng.raw() % (two_n + 1));
    const auto jp = moran::jump_probs(p, j);
    const double stay = moran::stay_probability(p, j);
    worst = std::max(worst, std::abs(jp.down + jp.up + stay - 1.0));
  }
  return {make_row(4, "partition_of_unity", worst, '=', 1e-12,
                   "10000 random draws")};
}

// --- criterion 5: the per-event chain is reversible (verified against
// power iteration on a tiny chain); the discrete-generation chain is not. --
std::vector<CheckRow> criterion5() {
  std::vector<CheckRow> rows;
  const auto event = moran_event_params(balanced_bench(), 50);
  rows.push_back(make_row(5, "event_chain_balance",
                          moran::detailed_balance_violation(event), '=',
                          1e-12));

  const auto tiny = moran_event_params(
      diffusion_bench(0.05, 0.04, 0.02, 0.1,
                      SelectionProfile::balancing(0.3, 0.4)),
      2);
  const auto law = moran::stationary_distribution(tiny);
  const auto P = moran::transition_matrix(tiny);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(P.rows(), 1.0 / P.rows());
  for (int it = 0; it < 2000000; ++it) {
    Eigen::VectorXd next = P.transpose() * x;
    const double delta = (next - x).lpNorm<1>();
    x = next;
    if (delta < 1e-15) break;
  }
  double law_gap = 0.0;
  for (int i = 0; i < P.rows(); ++i) {
    law_gap = std::max(law_gap, std::abs(law[static_cast<std::size_t>(i)] -
                                         x[i]));
  }
  rows.push_back(make_row(5, "power_iteration_gap_2n4", law_gap, '=', 1e-10));

  const auto per_gen = matched_per_generation(50);
  const auto Pwf = wf::transition_matrix(per_gen);
  const auto psi = wf::stationary_distribution(Pwf);
  rows.push_back(make_row(5, "generation_chain_violation",
                          wf::detailed_balance_violation(Pwf, psi), '>',
                          1e-6));
  return rows;
}

// --- criterion 6: the from-zero iteration climbs monotonically to the
// direct solve at both benchmark strengths. ---------------------------------
std::vector<CheckRow> criterion6() {
  std::vector<CheckRow> rows;
  for (const double s0 : {0.16, 0.32}) {
    const auto params = balanced_bench(s0);
    const FrequencyGrid grid = FrequencyGrid::uniform(400);
    const auto iter = ode::solve_iterative(params, grid, 200, 1e-10);
    const auto direct = ode::solve_direct(params, grid);
    const double gap = std::max(
        {(iter.field.f_pp - direct.f_pp).cwiseAbs().maxCoeff(),
         (iter.field.f_pq - direct.f_pq).cwiseAbs().maxCoeff(),
         (iter.field.f_qq - direct.f_qq).cwiseAbs().maxCoeff()});
    const std::string tag = s0 == 0.16 ? "s016" : "s032";
    rows.push_back(make_row(6, "monotone_" + tag, iter.min_increment, '>',
                            -1e-11,
                            std::to_string(iter.iterations) + " stages"));
    rows.push_back(make_row(6, "limit_matches_direct_" + tag, gap, '=',
                            1e-9));
  }
  return rows;
}

// --- criterion 7: endpoint attainability over a 3x3 mutation grid
// straddling the critical exponent, rule vs quadrature. ---------------------
std::vector<CheckRow> criterion7() {
  int rule_mismatches = 0;
  int inconsistent = 0;
  for (const double mu1 : {0.25, 0.5, 0.75}) {
    for (const double mu2 : {0.25, 0.5, 0.75}) {
      const auto params = diffusion_bench(
          mu1, mu2, 0.0, 0.1, SelectionProfile::directional(0.0));
      const auto rep = diffusion::classify_boundaries(params);
      const bool expect_zero = 2.0 * mu2 < 1.0;
      const bool expect_one = 2.0 * mu1 < 1.0;
      if (rep.zero_accessible_rule != expect_zero) ++rule_mismatches;
      if (rep.one_accessible_rule != expect_one) ++rule_mismatches;
      if (!rep.consistent()) ++inconsistent;
    }
  }
  return {make_row(7, "exponent_rule_matches",
                   static_cast<double>(rule_mismatches), '=', 0.0,
                   "9 mutation pairs, both endpoints"),
          make_row(7, "quadrature_consistent",
                   static_cast<double>(inconsistent), '=', 0.0)};
}

// --- criterion 8: the transform accumulated along the time-dependent solve
// reproduces the stationary solve. -------------------------------------------
std::vector<CheckRow> criterion8() {
  const auto params = balanced_bench();
  const FrequencyGrid grid = FrequencyGrid::uniform(400);
  const auto direct = ode::solve_direct(params, grid);
  const auto cdf =
      ode::solve_time_dependent(params, grid, 0.01, 200.0, 4, 1000000);
  const double gap =
      std::max({(cdf.laplace[0] - direct.f_pp).cwiseAbs().maxCoeff(),
                (cdf.laplace[1] - direct.f_pq).cwiseAbs().maxCoeff(),
                (cdf.laplace[2] - direct.f_qq).cwiseAbs().maxCoeff()});
  return {make_row(8, "transform_vs_direct", gap, '=', 2e-3,
                   "dt 0.01, horizon 200")};
}

// --- criterion 9: the small-rate expansion of the identity deficit
// recovers the mean coalescence time, pointwise. -----------------------------
std::vector<CheckRow> criterion9() {
  std::vector<CheckRow> rows;
  const FrequencyGrid grid = FrequencyGrid::uniform(400);
  for (const bool neutral : {true, false}) {
    auto params = neutral ? neutral_bench() : balanced_bench();
    const auto times = ode::mean_coalescence_times(params, grid);
    std::array<Eigen::VectorXd, 2> deficits;
    const std::array<double, 2> nus{1e-3, 1e-4};
    for (std::size_t i = 0; i < nus.size(); ++i) {
      params.nu = nus[i];
      const auto field = ode::solve_direct(params, grid);
      deficits[i] =
          (Eigen::VectorXd::Ones(field.fbar.size()) - field.fbar) /
          (2.0 * nus[i]);
    }
    const Eigen::VectorXd richardson =
        (10.0 * deficits[1] - deficits[0]) / 9.0;
    const double rel = ((richardson - times.tbar).cwiseAbs().cwiseQuotient(
                            times.tbar.cwiseAbs()))
                           .maxCoeff();
    rows.push_back(make_row(9,
                            neutral ? "relative_error_neutral"
                                    : "relative_error_balanced",
                            rel, '=', 1e-3));
  }
  return rows;
}

// --- criterion 10: the pinned-frequency three-state baseline equals its
// closed forms and its own Monte Carlo. --------------------------------------
std::vector<CheckRow> criterion10(std::uint64_t seed) {
  const auto params = balanced_bench();
  const auto base = ode::constant_p_baseline(0.5, params);
  const double dev = std::max(
      {std::abs(base.f_pp - 9.0 / 11.0), std::abs(base.f_pq - 1.0 / 11.0),
       std::abs(base.f_qq - 9.0 / 11.0), std::abs(base.fbar - 5.0 / 11.0),
       std::abs(base.t_pp - 2.0), std::abs(base.t_pq - 42.0),
       std::abs(base.t_qq - 2.0), std::abs(base.tbar - 22.0)});
  std::vector<CheckRow> rows;
  rows.push_back(make_row(10, "closed_form_deviation", dev, '=', 1e-10,
                          "fbar 5/11, tbar 22"));

  // Pinned-frequency Monte Carlo: three sample configurations, constant
  // rates, exponential waiting times.
  const int replicates = 200000;
  std::vector<double> fs, ts;
  fs.reserve(replicates);
  ts.reserve(replicates);
  for (int rep = 0; rep < replicates; ++rep) {
    RngStream rng(seed, static_cast<std::uint64_t>(rep));
    const double u = rng.uniform();
    SampleState st = u < 0.25 ? SampleState{2, 0}
                   : u < 0.75 ? SampleState{1, 1}
                              : SampleState{0, 2};
    double t = 0.0;
    while (true) {
      const auto rt = mc::rates(0.5, st, params);
      const double lambda = mc::total_rate(rt, st);
      t += rng.exponential(lambda);
      const double v = rng.uniform() * lambda;
      if (v < rt.coal_pp + rt.coal_qq) break;
      if (v < rt.coal_pp + rt.coal_qq + st.n1 * rt.migrate_p_to_q) {
        st = {st.n1 - 1, st.n2 + 1};
      } else {
        st = {st.n1 + 1, st.n2 - 1};
      }
    }
    fs.push_back(std::exp(-2.0 * params.nu * t));
    ts.push_back(t);
  }
  const auto moments = [](const std::vector<double>& v) {
    const double mean = pairwise_sum(v) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    const double se =
        std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                  static_cast<double>(v.size()));
    return std::pair<double, double>(mean, se);
  };
  const auto [f_mean, f_se] = moments(fs);
  const auto [t_mean, t_se] = moments(ts);
  rows.push_back(make_row(
      10, "monte_carlo_identity", std::abs(f_mean - 5.0 / 11.0), '<',
      3.0 * f_se,
      "estimate " + report::format_value(f_mean) +
          "; documented reference level 0.43 reported, not gated"));
  rows.push_back(make_row(
      10, "monte_carlo_mean_time", std::abs(t_mean - 22.0), '<', 3.0 * t_se,
      "estimate " + report::format_value(t_mean) +
          "; documented reference level 6 reported, not gated"));
  return rows;
}

// --- criterion 11: the near-boundary ordering of the identities, and the
// averaged identity approaching the pinned baseline only under very strong
// balancing. ------------------------------------------------------------------
std::vector<CheckRow> criterion11() {
  std::vector<CheckRow> rows;
  const auto field =
      ode::solve_direct(balanced_bench(), FrequencyGrid::uniform(400));
  // At p = 0 exactly, the endpoint relation pins the split-pair value to
  // the resident-pair value, so the ordering holds there with equality by
  // construction; strict ordering is checked on the interior points.
  double margin = 1.0;
  for (std::size_t i = 1; i < field.points.size(); ++i) {
    if (field.points[i] > 0.05) break;
    const auto k = static_cast<Eigen::Index>(i);
    margin = std::min({margin, field.f_pp[k] - field.f_qq[k],
                       field.f_qq[k] - field.f_pq[k]});
  }
  rows.push_back(make_row(11, "near_zero_ordering", margin, '>', 0.0,
                          "interior points with p <= 0.05"));

  const double baseline = 5.0 / 11.0;
  const std::array<double, 6> strengths{0.0, 1.0, 4.0, 16.0, 64.0, 256.0};
  std::array<double, 6> avg{};
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    auto params = balanced_bench();
    params.selection = SelectionProfile::balancing(strengths[i], 0.5);
    avg[i] = averaged_fbar(params, 800);
  }
  double max_step = -1.0;
  for (std::size_t i = 0; i + 1 < avg.size(); ++i) {
    max_step = std::max(max_step, avg[i + 1] - avg[i]);
  }
  std::vector<std::string> sweep_note;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    sweep_note.push_back("s0=" + report::format_value(strengths[i]) + ": " +
                         report::format_value(avg[i]));
  }
  rows.push_back(make_row(11, "sweep_decreasing", max_step, '<', 0.0,
                          joined(sweep_note)));
  rows.push_back(make_row(11, "gap_still_wide_at_s16", avg[3] - baseline,
                          '>', 0.05));
  rows.push_back(make_row(11, "gap_closed_at_s256", avg[5] - baseline, '=',
                          0.01));
  return rows;
}

}  // namespace

std::vector<CheckRow> run_criterion(int criterion, std::uint64_t seed) {
  switch (criterion) {
    case 1: return criterion1();
    case 2: return criterion2(seed);
    case 3: return criterion3();
    case 4: return criterion4(seed);
    case 5: return criterion5();
    case 6: return criterion6();
    case 7: return criterion7();
    case 8: return criterion8();
    case 9: return criterion9();
    case 10: return criterion10(seed);
    case 11: return criterion11();
    default:
      throw std::invalid_argument("run_criterion: criterion must be 1..11");
  }
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "wf_vs_ode", "moran_vs_wf", "mc_vs_ode", "engines", "neutral"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "wf_vs_ode") return {1};
  if (suite == "moran_vs_wf") return {4, 5};
  if (suite == "mc_vs_ode") return {10};
  if (suite == "engines") return {3};
  if (suite == "neutral") return {2};
  throw std::invalid_argument("unknown check suite: " + suite);
}

std::vector<CheckRow> run_suite(const std::string& suite,
                                std::uint64_t seed) {
  std::vector<CheckRow> rows;
  for (const int k : suite_criteria(suite)) {
    auto part = run_criterion(k, seed);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

bool all_pass(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(),
                     [](const CheckRow& r) { return r.pass; });
}

int first_failing_criterion(const std::vector<CheckRow>& rows) {
  int first = 0;
  for (const auto& row : rows) {
    if (!row.pass && (first == 0 || row.criterion < first)) {
      first = row.criterion;
    }
  }
  return first;
}

std::string report_csv(const std::vector<CheckRow>& rows) {
  std::ostringstream out;
  out << "criterion,check,measured,relation,threshold,pass,note\n";
  for (const auto& row : rows) {
    if (row.timing) continue;  // enforced via pass/exit code, not reported
    out << row.criterion << ',' << row.name << ','
        << report::format_value(row.measured) << ',' << row.relation << ','
        << report::format_value(row.threshold) << ','
        << (row.pass ? "true" : "false") << ',' << row.note << '\n';
  }
  return out.str();
}

}  // namespace coalbg::checks
