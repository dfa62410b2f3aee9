// coalbg command line: figure reproduction, cross-check suites, and direct
// access to the solvers and simulators.  Every dataset-producing command
// writes CSV files plus one manifest per CSV recording the command, the
// full parameter set, the scale convention, the seed, and the
// discretization, so a run can be reproduced byte for byte.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coalbg/checks.hpp"
#include "coalbg/coalescent_mc.hpp"
#include "coalbg/core.hpp"
#include "coalbg/diffusion.hpp"
#include "coalbg/identity_ode.hpp"
#include "coalbg/moran.hpp"
#include "coalbg/report.hpp"
#include "coalbg/wf_exact.hpp"

namespace {

using namespace coalbg;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Configuration files: JSON, either flat dotted keys or a nested
// "selection" object.  Keys: mu1, mu2, r, nu, N, scale, selection.kind,
// selection.s0, selection.p0.  Values override the command's defaults.
// ---------------------------------------------------------------------------

ModelParams apply_config(ModelParams base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (!doc.is_object()) {
    throw std::runtime_error("config root must be a JSON object");
  }

  // Collect selection fields first so a partially overridden profile is
  // rebuilt through the factories.
  SelectionProfile::Kind kind = base.selection.kind;
  double s0 = base.selection.s0;
  double p0 = base.selection.p0;
  bool selection_touched = false;

  auto apply_selection_key = [&](const std::string& key,
                                 const nlohmann::json& value) {
    selection_touched = true;
    if (key == "kind") {
      const std::string name = value.get<std::string>();
      if (name == "directional") kind = SelectionProfile::Kind::directional;
      else if (name == "balancing") kind = SelectionProfile::Kind::balancing;
      else {
        throw std::runtime_error("config: unknown selection.kind '" + name +
                                 "' (directional | balancing)");
      }
    } else if (key == "s0") {
      s0 = value.get<double>();
    } else if (key == "p0") {
      p0 = value.get<double>();
    } else {
      throw std::runtime_error("config: unknown key 'selection." + key + "'");
    }
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "mu1") base.mu1 = value.get<double>();
    else if (key == "mu2") base.mu2 = value.get<double>();
    else if (key == "r") base.r = value.get<double>();
    else if (key == "nu") base.nu = value.get<double>();
    else if (key == "N") base.N = value.get<int>();
    else if (key == "scale") base.scale = scale_from_string(value.get<std::string>());
    else if (key == "selection" && value.is_object()) {
      for (const auto& [skey, svalue] : value.items()) {
        apply_selection_key(skey, svalue);
      }
    } else if (key.rfind("selection.", 0) == 0) {
      apply_selection_key(key.substr(10), value);
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }

  if (selection_touched) {
    base.selection = kind == SelectionProfile::Kind::directional
                         ? SelectionProfile::directional(s0)
                         : SelectionProfile::balancing(s0, p0);
  }
  return base;
}

// ---------------------------------------------------------------------------
// Output plumbing: one manifest per CSV, walltime measured per command.
// ---------------------------------------------------------------------------

struct Emitter {
  std::string out_dir;
  std::string command;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  std::vector<std::string> written;

  void emit(const std::string& name, const std::string& csv_text,
            const ModelParams& params,
            std::vector<std::pair<std::string, std::string>> discretization) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / (name + ".csv");
    report::write_text(csv_path.string(), csv_text);

    report::RunManifest manifest;
    manifest.command = command;
    manifest.parameters = report::describe(params);
    manifest.scale = to_string(params.scale);
    manifest.seed = seed;
    manifest.discretization = std::move(discretization);
    manifest.walltime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    manifest.outputs = {name + ".csv"};
    const fs::path man_path = fs::path(out_dir) / (name + ".manifest.json");
    report::write_manifest(man_path.string(), manifest);
    written.push_back(csv_path.string());
    written.push_back(man_path.string());
  }

  void emit(const std::string& name, const report::Table& table,
            const ModelParams& params,
            std::vector<std::pair<std::string, std::string>> discretization) {
    emit(name, report::to_csv(table), params, std::move(discretization));
  }

  void summarize() const {
    for (const auto& path : written) std::cout << "wrote " << path << "\n";
  }
};

std::string join_argv(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared parameter sets.  The continuum benchmark: symmetric mutation
// 0.025, neutral rate 0.1, no recombination, balancing 0.16 toward 1/2.
// The finite-N benchmark: N = 50 with per-generation rates 0.0005 /
// selection 0.16 / neutral mutation 0.002 — the same continuum image.
// ---------------------------------------------------------------------------

ModelParams continuum_benchmark() {
  ModelParams p;
  p.scale = Scale::diffusion;
  p.mu1 = p.mu2 = 0.025;
  p.r = 0.0;
  p.nu = 0.1;
  p.selection = SelectionProfile::balancing(0.16, 0.5);
  return p;
}

ModelParams finite_benchmark() {
  ModelParams p;
  p.scale = Scale::per_generation;
  p.N = 50;
  p.mu1 = p.mu2 = 0.0005;
  p.r = 0.0;
  p.nu = 0.002;
  p.selection = SelectionProfile::balancing(0.16, 0.5);
  return p;
}

report::Table identity_table(const ode::IdentityField& field) {
  report::Table t;
  t.header = {"p", "f_PP", "f_PQ", "f_QQ", "fbar"};
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.rows.push_back({field.points[i], field.f_pp[k], field.f_pq[k],
                      field.f_qq[k], field.fbar[k]});
  }
  return t;
}

report::Table time_table(const ode::TimeField& field) {
  report::Table t;
  t.header = {"p", "T_PP", "T_PQ", "T_QQ", "Tbar"};
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.rows.push_back({field.points[i], field.t_pp[k], field.t_pq[k],
                      field.t_qq[k], field.tbar[k]});
  }
  return t;
}

// Normalized stationary density at the interior grid points (the endpoints
// are omitted: when a boundary is accessible the density diverges there).
report::Table density_table(const ModelParams& params,
                            const std::vector<double>& points) {
  const diffusion::StationaryDensity density(params);
  report::Table t;
  t.header = {"p", "value"};
  for (const double p : points) {
    if (p <= 0.0 || p >= 1.0) continue;
    t.rows.push_back({p, density.density(p)});
  }
  return t;
}

report::Table wf_identity_table(const wf::IdentityVector& fixed, int two_n) {
  report::Table t;
  t.header = {"j", "p", "f_PP", "f_PQ", "f_QQ"};
  for (int j = 0; j <= two_n; ++j) {
    const double p = static_cast<double>(j) / two_n;
    const double pp = j >= 2 ? fixed.f_pp[j] : kNaN;
    const double pq = (j >= 1 && j <= two_n - 1) ? fixed.f_pq[j] : kNaN;
    const double qq = j <= two_n - 2 ? fixed.f_qq[j] : kNaN;
    t.rows.push_back({static_cast<double>(j), p, pp, pq, qq});
  }
  return t;
}

// ---------------------------------------------------------------------------
// figure <id>
// ---------------------------------------------------------------------------

const std::vector<double>& sweep_strengths() {
  static const std::vector<double> s{0.0, 0.16, 0.32, 1.0, 2.0,  4.0,
                                     8.0, 16.0, 32.0, 64.0, 128.0, 256.0};
  return s;
}

void run_figure(const std::string& id, const std::string& config,
                Emitter& emit) {
  if (id == "fig1") {
    // Exact finite-N fixed point against the continuum solve, with the
    // stationary density; the continuum grid is chosen so the chain's
    // count lattice is a subset of the grid (801 closed points, stride 8).
    ModelParams per_gen = finite_benchmark();
    if (!config.empty()) per_gen = apply_config(per_gen, config);
    const auto diff = wf_matched_diffusion_params(per_gen);
    const int two_n = 2 * per_gen.N.value();

    const auto fixed = wf::identity_fixed_point(per_gen);
    emit.emit("fig1_wf_identity", wf_identity_table(fixed, two_n), per_gen,
              {{"two_n", std::to_string(two_n)}, {"tol", "1e-10"}});

    const auto field = ode::solve_direct(diff, FrequencyGrid::uniform(799));
    emit.emit("fig1_ode_identity", identity_table(field), diff,
              {{"grid_interior_points", "799"}});
    emit.emit("fig1_density", density_table(diff, field.points), diff,
              {{"quadrature_panels_per_side", "400"}});
    return;
  }

  if (id == "fig2" || id == "fig3") {
    ModelParams params = continuum_benchmark();
    if (id == "fig3") params.selection = SelectionProfile::balancing(0.32, 0.5);
    if (!config.empty()) params = apply_config(params, config);
    const auto field = ode::solve_direct(params, FrequencyGrid::uniform(400));
    emit.emit(id + "_identity", identity_table(field), params,
              {{"grid_interior_points", "400"}});
    emit.emit(id + "_density", density_table(params, field.points), params,
              {{"quadrature_panels_per_side", "400"}});
    return;
  }

  if (id == "fig4" || id == "fig5") {
    // Sweep of the balancing strength: stationarity-averaged identity and
    // the averaged mean coalescence time relative to the neutral
    // expectation of 2 continuum units.
    ModelParams base = continuum_benchmark();
    if (!config.empty()) base = apply_config(base, config);
    const FrequencyGrid grid = FrequencyGrid::uniform(800);
    report::Table sweep;
    sweep.header = {"s0", "avg_fbar", "Tbar_scaled"};
    for (const double s0 : sweep_strengths()) {
      ModelParams params = base;
      params.selection = SelectionProfile::balancing(s0, 0.5);
      const auto field = ode::solve_direct(params, grid);
      const auto times = ode::mean_coalescence_times(params, grid);
      const diffusion::StationaryDensity density(params);
      const double avg_f =
          ode::average_over_stationarity(field.points, field.fbar, density);
      const double avg_t =
          ode::average_over_stationarity(times.points, times.tbar, density);
      sweep.rows.push_back({s0, avg_f, avg_t / 2.0});
    }
    emit.emit(id + "_sweep", sweep, base,
              {{"grid_interior_points", "800"},
               {"s0_values", std::to_string(sweep_strengths().size())}});

    if (id == "fig5") {
      // Both baseline conventions: the pinned-frequency solution of this
      // artifact, and the reference levels documented alongside the
      // original figures (0.43 for the averaged identity; a mean time of
      // 6N, i.e. 3 relative to the neutral 2N).  The documented levels are
      // reported for comparison, not fitted or enforced.
      const auto baseline = ode::constant_p_baseline(0.5, base);
      std::ostringstream csv;
      csv << "convention,fbar,tbar_scaled\n";
      csv << "solved_constant_p," << report::format_value(baseline.fbar)
          << ',' << report::format_value(baseline.tbar / 2.0) << '\n';
      csv << "documented_reference,0.43,3\n";
      emit.emit("fig5_baselines", csv.str(), base,
                {{"pinned_frequency", "0.5"}});
    }
    return;
  }

  throw std::runtime_error("unknown figure id: " + id);
}

// ---------------------------------------------------------------------------
// check <suite...>
// ---------------------------------------------------------------------------

int run_check(const std::vector<std::string>& suites, std::uint64_t seed,
              const std::string& out_dir, const std::string& command) {
  std::vector<checks::CheckRow> all_rows;
  for (const auto& suite : suites) {
    auto rows = checks::run_suite(suite, seed);
    const std::string csv = checks::report_csv(rows);
    std::cout << csv;
    std::cerr << "suite " << suite << ": "
              << (checks::all_pass(rows) ? "pass" : "FAIL") << "\n";
    if (!out_dir.empty()) {
      Emitter emit{out_dir, command, seed};
      ModelParams bench = continuum_benchmark();
      emit.emit("check_" + suite, csv, bench,
                {{"suite", suite}});
    }
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
  }
  return checks::first_failing_criterion(all_rows);
}

// ---------------------------------------------------------------------------
// solve / simulate / baseline
// ---------------------------------------------------------------------------

void run_solve(const std::string& config, int grid_m,
               const std::string& pairing, Emitter& emit) {
  ModelParams params = continuum_benchmark();
  if (!config.empty()) params = apply_config(params, config);
  if (params.scale == Scale::per_generation) {
    params = wf_matched_diffusion_params(params);
  }
  const ode::BoundaryPairing bp = pairing == "transposed"
                                      ? ode::BoundaryPairing::transposed
                                      : ode::BoundaryPairing::cross;
  const FrequencyGrid grid = FrequencyGrid::uniform(grid_m);
  const auto field = ode::solve_direct(params, grid, bp);
  const auto times = ode::mean_coalescence_times(params, grid);
  const std::vector<std::pair<std::string, std::string>> disc{
      {"grid_interior_points", std::to_string(grid_m)},
      {"boundary_pairing", pairing}};
  emit.emit("solve_identity", identity_table(field), params, disc);
  emit.emit("solve_times", time_table(times), params, disc);
  emit.emit("solve_density", density_table(params, field.points), params,
            {{"quadrature_panels_per_side", "400"}});
}

void run_simulate(const std::string& config, long replicates,
                  std::uint64_t seed, const std::string& engine_name,
                  int engine_n, double engine_dt, std::optional<double> p0,
                  bool log_replicates, Emitter& emit) {
  ModelParams params = continuum_benchmark();
  if (!config.empty()) params = apply_config(params, config);
  if (params.scale == Scale::per_generation) {
    params = wf_matched_diffusion_params(params);
  }
  mc::ReplicateOptions options;
  if (engine_name == "euler") options.engine = mc::EulerEngine{engine_dt};
  else options.engine = mc::MoranEngine{engine_n};
  options.p0 = p0;

  const auto outcomes = mc::run_replicates(params, replicates, seed, options);
  const auto identity = mc::identity_from(outcomes, params.nu);
  const auto mean_time = mc::mean_time_from(outcomes);

  std::ostringstream est;
  est << "estimand,value,std_error,replicates,seed\n";
  const auto row = [&](const std::string& name, const mc::McEstimate& e) {
    est << name << ',' << report::format_value(e.value) << ','
        << report::format_value(e.std_error) << ',' << e.replicates << ','
        << seed << '\n';
  };
  row("identity", identity);
  row("mean_time", mean_time);

  std::vector<std::pair<std::string, std::string>> disc{
      {"engine", engine_name},
      {"replicates", std::to_string(replicates)}};
  if (engine_name == "euler") {
    disc.emplace_back("dt", report::format_value(engine_dt));
  } else {
    disc.emplace_back("engine_n", std::to_string(engine_n));
  }
  if (p0) disc.emplace_back("p0", report::format_value(*p0));
  emit.emit("simulate_estimates", est.str(), params, disc);

  if (log_replicates) {
    report::Table log;
    log.header = {"replicate", "T", "jumps", "terminal_background",
                  "p0", "n1_0", "n2_0"};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& o = outcomes[i];
      log.rows.push_back({static_cast<double>(i), o.coalescence_time,
                          static_cast<double>(o.jumps),
                          static_cast<double>(o.terminal_background), o.p0,
                          static_cast<double>(o.initial.n1),
                          static_cast<double>(o.initial.n2)});
    }
    emit.emit("simulate_replicates", log, params, disc);
  }

  std::cout << "identity  " << identity.value << " (se "
            << identity.std_error << ")\n";
  std::cout << "mean_time " << mean_time.value << " (se "
            << mean_time.std_error << ")\n";
}

void run_baseline(const std::string& config, double p0, Emitter& emit,
                  bool have_out) {
  ModelParams params = continuum_benchmark();
  if (!config.empty()) params = apply_config(params, config);
  if (params.scale == Scale::per_generation) {
    params = wf_matched_diffusion_params(params);
  }
  const auto b = ode::constant_p_baseline(p0, params);
  std::cout << "pinned frequency " << p0 << "\n";
  std::cout << "f_PP  " << b.f_pp << "\nf_PQ  " << b.f_pq << "\nf_QQ  "
            << b.f_qq << "\nfbar  " << b.fbar << "\n";
  std::cout << "T_PP  " << b.t_pp << "\nT_PQ  " << b.t_pq << "\nT_QQ  "
            << b.t_qq << "\nTbar  " << b.tbar << "\n";
  if (have_out) {
    report::Table t;
    t.header = {"p0", "f_PP", "f_PQ", "f_QQ", "fbar",
                "T_PP", "T_PQ", "T_QQ", "Tbar"};
    t.rows.push_back({p0, b.f_pp, b.f_pq, b.f_qq, b.fbar, b.t_pp, b.t_pq,
                      b.t_qq, b.tbar});
    emit.emit("baseline", t, params, {{"pinned_frequency",
                                       report::format_value(p0)}});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genealogies at a neutral locus linked to a selected "
               "two-allele locus: exact finite-N chains, continuum "
               "solvers, and Monte Carlo, with figure reproduction and "
               "cross-validation suites."};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  const std::string command = join_argv(argc, argv);

  // figure
  auto* figure = app.add_subcommand("figure", "Reproduce one of the five "
                                              "reference figures");
  std::string fig_id;
  figure->add_option("id", fig_id, "fig1 | fig2 | fig3 | fig4 | fig5")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5"}));
  std::string fig_config, fig_out = ".";
  std::uint64_t fig_seed = 0;
  figure->add_option("--config", fig_config, "JSON parameter overrides");
  figure->add_option("--seed", fig_seed, "Seed recorded in the manifests");
  figure->add_option("--out", fig_out, "Output directory (default .)");

  // check
  auto* check = app.add_subcommand("check", "Run cross-validation suites; "
                                            "exit 0 iff all pass, else the "
                                            "first failing criterion");
  std::vector<std::string> suites;
  check->add_option("suite", suites, "wf_vs_ode | moran_vs_wf | mc_vs_ode | "
                                     "engines | neutral")
      ->required()
      ->check(CLI::IsMember(checks::suite_names()));
  std::uint64_t check_seed = 20260819ULL;
  std::string check_out;
  check->add_option("--seed", check_seed, "Seed for the Monte Carlo checks");
  check->add_option("--out", check_out, "Also write the report CSV here");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve the identity and "
                                            "mean-time systems");
  std::string solve_config, solve_out = ".", solve_pairing = "cross";
  int solve_grid = 400;
  solve->add_option("--config", solve_config, "JSON parameter overrides");
  solve->add_option("--grid", solve_grid, "Interior grid points")
      ->check(CLI::PositiveNumber);
  solve->add_option("--pairing", solve_pairing,
                    "Endpoint pairing of the split-pair component")
      ->check(CLI::IsMember({"cross", "transposed"}));
  solve->add_option("--out", solve_out, "Output directory (default .)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo genealogy "
                                                  "replicates");
  std::string sim_config, sim_out = ".", sim_engine = "moran";
  long sim_replicates = 10000;
  std::uint64_t sim_seed = 1;
  int sim_engine_n = 100;
  double sim_dt = 1e-4;
  double sim_p0 = -1.0;
  bool sim_log = false;
  simulate->add_option("--config", sim_config, "JSON parameter overrides");
  simulate->add_option("--replicates", sim_replicates, "Replicate count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "Base seed (replicate k draws "
                                           "from stream (seed, k))");
  simulate->add_option("--engine", sim_engine, "moran | euler")
      ->check(CLI::IsMember({"moran", "euler"}));
  simulate->add_option("--engine-n", sim_engine_n,
                       "Population size of the exact engine")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--dt", sim_dt, "Step of the euler engine")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--p0", sim_p0, "Pin the initial frequency "
                                       "(default: stationary draw)")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_flag("--log", sim_log, "Also write the per-replicate log");
  simulate->add_option("--out", sim_out, "Output directory (default .)");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Pinned-frequency "
                                                  "baseline identities and "
                                                  "mean times");
  std::string base_config, base_out;
  double base_p0 = 0.5;
  baseline->add_option("--config", base_config, "JSON parameter overrides");
  baseline->add_option("--p0", base_p0, "Pinned frequency")
      ->check(CLI::Range(0.0, 1.0));
  baseline->add_option("--out", base_out, "Also write the CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (figure->parsed()) {
      Emitter emit{fig_out, command, fig_seed};
      run_figure(fig_id, fig_config, emit);
      emit.summarize();
      return 0;
    }
    if (check->parsed()) {
      return run_check(suites, check_seed, check_out, command);
    }
    if (solve->parsed()) {
      Emitter emit{solve_out, command, 0};
      run_solve(solve_config, solve_grid, solve_pairing, emit);
      emit.summarize();
      return 0;
    }
    if (simulate->parsed()) {
      Emitter emit{sim_out, command, sim_seed};
      run_simulate(sim_config, sim_replicates, sim_seed, sim_engine,
                   sim_engine_n, sim_dt,
                   sim_p0 >= 0.0 ? std::optional<double>(sim_p0)
                                 : std::nullopt,
                   sim_log, emit);
      emit.summarize();
      return 0;
    }
    if (baseline->parsed()) {
      Emitter emit{base_out, command, 0};
      run_baseline(base_config, base_p0, emit, !base_out.empty());
      emit.summarize();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
