#include "coalbg/identity_ode.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coalbg::ode {

namespace {

using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

void require_solvable(const ModelParams& params, const char* where) {
  if (params.scale != Scale::diffusion) {
    throw std::invalid_argument(std::string(where) +
                                ": parameters must be on the continuum scale");
  }
  params.require_positive_mutation();
}

void require_grid(const FrequencyGrid& grid, const char* where) {
  if (grid.size() < 8) {
    throw std::invalid_argument(std::string(where) +
                                ": need at least 8 interior grid points");
  }
}

Eigen::VectorXd solve_sparse(const SpMat& a, const Eigen::VectorXd& rhs,
                             const char* where) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error(std::string(where) + ": singular linear system");
  }
  return lu.solve(rhs);
}

void check_range(const Eigen::VectorXd& x, double lo, double hi,
                 const char* where) {
  for (int i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo && x[i] <= hi)) {
      throw std::runtime_error(std::string(where) +
                               ": solution escapes its admissible range");
    }
  }
}

Eigen::VectorXd compose_pair_average(const std::vector<double>& points,
                                     const Eigen::VectorXd& pp,
                                     const Eigen::VectorXd& pq,
                                     const Eigen::VectorXd& qq) {
  Eigen::VectorXd out(pp.size());
  for (int i = 0; i < pp.size(); ++i) {
    out[i] = diffusion::pair_average(points[static_cast<std::size_t>(i)],
                                     pp[i], pq[i], qq[i]);
  }
  return out;
}

IdentityField make_identity_field(const FrequencyGrid& grid,
                                  const std::vector<double>& points,
                                  const Eigen::VectorXd& x, const char* where,
                                  bool check) {
  const int n = static_cast<int>(points.size());
  IdentityField field;
  field.grid = grid;
  field.points = points;
  field.f_pp = x.segment(0, n);
  field.f_pq = x.segment(n, n);
  field.f_qq = x.segment(2 * n, n);
  if (check) {
    check_range(field.f_pp, -1e-9, 1.0 + 1e-9, where);
    check_range(field.f_pq, -1e-9, 1.0 + 1e-9, where);
    check_range(field.f_qq, -1e-9, 1.0 + 1e-9, where);
  }
  field.fbar = compose_pair_average(points, field.f_pp, field.f_pq, field.f_qq);
  return field;
}

}  // namespace

std::vector<BoundaryRelation> boundary_conditions(const ModelParams& params,
                                                  const FrequencyGrid& grid,
                                                  SystemKind kind,
                                                  BoundaryPairing pairing) {
  if (params.scale != Scale::diffusion) {
    throw std::invalid_argument(
        "boundary_conditions: parameters must be on the continuum scale");
  }
  require_grid(grid, "boundary_conditions");
  const auto points = grid.all_points();
  const int n = static_cast<int>(points.size());
  const int last = n - 1;
  const double h = grid.spacing();
  const bool id = kind == SystemKind::identity;
  // endpoint-value coefficient of the derivative relations
  const double z = id ? 1.0 + 4.0 * params.nu : 1.0;
  const double value_rhs = id ? 1.0 : 0.0;  // algebraic relations
  const double deriv_rhs = id ? 1.0 : 2.0;  // derivative relations
  const auto idx = [n](int component, int i) { return component * n + i; };

  std::vector<BoundaryRelation> out;
  out.reserve(6);

  // Vanishing-side value relations: multiply the equation for the
  // configuration living on the vanishing background by twice that
  // background's frequency and take the limit.
  {
    BoundaryRelation rel;
    rel.component = 0;
    rel.point = 0;
    rel.coefficients = {{idx(0, 0), 1.0 + 2.0 * params.mu2},
                        {idx(1, 0), -2.0 * params.mu2}};
    rel.rhs = value_rhs;
    out.push_back(rel);
  }
  {
    BoundaryRelation rel;
    rel.component = 2;
    rel.point = last;
    rel.coefficients = {{idx(2, last), 1.0 + 2.0 * params.mu1},
                        {idx(1, last), -2.0 * params.mu1}};
    rel.rhs = value_rhs;
    out.push_back(rel);
  }

  // Mixed configuration: one lineage sits on the vanishing background, so
  // the limit ties the endpoint value to the same-side pure configuration
  // of the surviving pairing.
  {
    BoundaryRelation rel;
    rel.component = 1;
    rel.point = 0;
    const int partner = pairing == BoundaryPairing::cross ? 2 : 0;
    rel.coefficients = {{idx(1, 0), 1.0}, {idx(partner, 0), -1.0}};
    rel.rhs = 0.0;
    out.push_back(rel);
  }
  {
    BoundaryRelation rel;
    rel.component = 1;
    rel.point = last;
    const int partner = pairing == BoundaryPairing::cross ? 0 : 2;
    rel.coefficients = {{idx(1, last), 1.0}, {idx(partner, last), -1.0}};
    rel.rhs = 0.0;
    out.push_back(rel);
  }

  // Full-side derivative relations, one-sided second-order differences.
  {
    BoundaryRelation rel;  // pure pair on the background filling up at p=0
    rel.component = 2;
    rel.point = 0;
    const double c = params.mu2 / (2.0 * h);
    rel.coefficients = {{idx(2, 0), z + 3.0 * c},
                        {idx(2, 1), -4.0 * c},
                        {idx(2, 2), c}};
    rel.rhs = deriv_rhs;
    out.push_back(rel);
  }
  {
    BoundaryRelation rel;
    rel.component = 0;
    rel.point = last;
    const double c = params.mu1 / (2.0 * h);
    rel.coefficients = {{idx(0, last), z + 3.0 * c},
                        {idx(0, last - 1), -4.0 * c},
                        {idx(0, last - 2), c}};
    rel.rhs = deriv_rhs;
    out.push_back(rel);
  }
  return out;
}

AssembledSystem assemble_system(const ModelParams& params,
                                const FrequencyGrid& grid, SystemKind kind,
                                BoundaryPairing pairing) {
  if (params.scale != Scale::diffusion) {
    throw std::invalid_argument(
        "assemble_system: parameters must be on the continuum scale");
  }
  require_grid(grid, "assemble_system");

  AssembledSystem sys;
  sys.grid = grid;
  sys.points = grid.all_points();
  sys.h = grid.spacing();
  sys.kind = kind;
  sys.pairing = pairing;

  const int n = sys.points_per_component();
  const int last = n - 1;
  const double h = sys.h;
  const bool id = kind == SystemKind::identity;
  const double base = id ? -2.0 * params.nu : 0.0;
  const auto idx = [n](int component, int i) { return component * n + i; };

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(12 * n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * n);

  for (int i = 1; i < last; ++i) {
    const double p = sys.points[static_cast<std::size_t>(i)];
    const double q = 1.0 - p;
    const double a = 0.25 * p * q;
    const double b =
        0.5 * (params.selection(p) * p * q - params.mu1 * p + params.mu2 * q);
    const double lo = a / (h * h) - b / (2.0 * h);
    const double up = a / (h * h) + b / (2.0 * h);
    const double mid = -2.0 * a / (h * h);

    {  // both lineages on the selected background
      const int row = idx(0, i);
      const double coal = 1.0 / (2.0 * p);
      const double mig = params.mu2 * q / p + params.r * q;
      trip.emplace_back(row, idx(0, i - 1), lo);
      trip.emplace_back(row, idx(0, i), mid + base - coal - mig);
      trip.emplace_back(row, idx(0, i + 1), up);
      trip.emplace_back(row, idx(1, i), mig);
      rhs[row] = id ? -coal : -1.0;
    }
    {  // one lineage on each background
      const int row = idx(1, i);
      const double to_pp = 0.5 * (params.mu1 * p / q + params.r * p);
      const double to_qq = 0.5 * (params.mu2 * q / p + params.r * q);
      trip.emplace_back(row, idx(1, i - 1), lo);
      trip.emplace_back(row, idx(1, i), mid + base - to_pp - to_qq);
      trip.emplace_back(row, idx(1, i + 1), up);
      trip.emplace_back(row, idx(0, i), to_pp);
      trip.emplace_back(row, idx(2, i), to_qq);
      rhs[row] = id ? 0.0 : -1.0;
    }
    {  // both lineages on the other background
      const int row = idx(2, i);
      const double coal = 1.0 / (2.0 * q);
      const double mig = params.mu1 * p / q + params.r * p;
      trip.emplace_back(row, idx(2, i - 1), lo);
      trip.emplace_back(row, idx(2, i), mid + base - coal - mig);
      trip.emplace_back(row, idx(2, i + 1), up);
      trip.emplace_back(row, idx(1, i), mig);
      rhs[row] = id ? -coal : -1.0;
    }
  }

  for (const auto& rel : boundary_conditions(params, grid, kind, pairing)) {
    const int row = idx(rel.component, rel.point);
    for (const auto& [col, coeff] : rel.coefficients) {
      trip.emplace_back(row, col, coeff);
    }
    rhs[row] = rel.rhs;
  }

  sys.matrix = SpMat(3 * n, 3 * n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  sys.rhs = rhs;
  return sys;
}

IdentityField solve_direct(const ModelParams& params, const FrequencyGrid& grid,
                           BoundaryPairing pairing) {
  require_solvable(params, "solve_direct");
  const auto sys = assemble_system(params, grid, SystemKind::identity, pairing);
  const Eigen::VectorXd x = solve_sparse(sys.matrix, sys.rhs, "solve_direct");
  return make_identity_field(grid, sys.points, x, "solve_direct", true);
}

TimeField mean_coalescence_times(const ModelParams& params,
                                 const FrequencyGrid& grid) {
  require_solvable(params, "mean_coalescence_times");
  const auto sys =
      assemble_system(params, grid, SystemKind::mean_time,
                      BoundaryPairing::cross);
  const Eigen::VectorXd x =
      solve_sparse(sys.matrix, sys.rhs, "mean_coalescence_times");
  const int n = sys.points_per_component();
  TimeField field;
  field.grid = grid;
  field.points = sys.points;
  field.t_pp = x.segment(0, n);
  field.t_pq = x.segment(n, n);
  field.t_qq = x.segment(2 * n, n);
  const double huge = 1e12;
  check_range(field.t_pp, -1e-9, huge, "mean_coalescence_times");
  check_range(field.t_pq, -1e-9, huge, "mean_coalescence_times");
  check_range(field.t_qq, -1e-9, huge, "mean_coalescence_times");
  field.tbar = compose_pair_average(sys.points, field.t_pp, field.t_pq,
                                    field.t_qq);
  return field;
}

namespace {

// Diagonal blocks of the assembled matrix, factored once, plus the full
// matrix for forming lagged cross-component right-hand sides.
struct BlockSolver {
  explicit BlockSolver(const AssembledSystem& system)
      : n(system.points_per_component()), matrix(&system.matrix),
        rhs(&system.rhs) {
    std::array<std::vector<Triplet>, 3> trip;
    for (int outer = 0; outer < system.matrix.outerSize(); ++outer) {
      for (SpMat::InnerIterator it(system.matrix, outer); it; ++it) {
        const int rc = static_cast<int>(it.row()) / n;
        const int cc = static_cast<int>(it.col()) / n;
        if (rc == cc) {
          trip[static_cast<std::size_t>(rc)].emplace_back(
              static_cast<int>(it.row()) - rc * n,
              static_cast<int>(it.col()) - cc * n, it.value());
        }
      }
    }
    for (int c = 0; c < 3; ++c) {
      diag[static_cast<std::size_t>(c)].resize(n, n);
      diag[static_cast<std::size_t>(c)].setFromTriplets(
          trip[static_cast<std::size_t>(c)].begin(),
          trip[static_cast<std::size_t>(c)].end());
      lu[static_cast<std::size_t>(c)].compute(
          diag[static_cast<std::size_t>(c)]);
      if (lu[static_cast<std::size_t>(c)].info() != Eigen::Success) {
        throw std::runtime_error("iterative stage: singular component system");
      }
    }
  }

  std::array<Eigen::VectorXd, 3> sweep(
      const std::array<Eigen::VectorXd, 3>& previous) const {
    Eigen::VectorXd full(3 * n);
    for (int c = 0; c < 3; ++c) {
      full.segment(c * n, n) = previous[static_cast<std::size_t>(c)];
    }
    const Eigen::VectorXd coupled = (*matrix) * full;
    std::array<Eigen::VectorXd, 3> next;
    for (int c = 0; c < 3; ++c) {
      // keep only the own-block action; cross-component terms are lagged
      const Eigen::VectorXd own =
          diag[static_cast<std::size_t>(c)] *
          previous[static_cast<std::size_t>(c)];
      const Eigen::VectorXd b =
          rhs->segment(c * n, n) - coupled.segment(c * n, n) + own;
      next[static_cast<std::size_t>(c)] =
          lu[static_cast<std::size_t>(c)].solve(b);
    }
    return next;
  }

  int n;
  const SpMat* matrix;
  const Eigen::VectorXd* rhs;
  std::array<SpMat, 3> diag;
  std::array<Eigen::SparseLU<SpMat>, 3> lu;
};

}  // namespace

std::array<Eigen::VectorXd, 3> iterative_sweep(
    const AssembledSystem& system,
    const std::array<Eigen::VectorXd, 3>& previous) {
  return BlockSolver(system).sweep(previous);
}

IterativeSolution solve_iterative(const ModelParams& params,
                                  const FrequencyGrid& grid, int n_max,
                                  double tol) {
  require_solvable(params, "solve_iterative");
  if (n_max < 1 || !(tol > 0.0)) {
    throw std::invalid_argument("solve_iterative: need n_max >= 1 and tol > 0");
  }
  const auto sys =
      assemble_system(params, grid, SystemKind::identity,
                      BoundaryPairing::cross);
  const BlockSolver solver(sys);
  const int n = sys.points_per_component();

  IterativeSolution out;
  out.min_increment = 0.0;
  std::array<Eigen::VectorXd, 3> prev = {Eigen::VectorXd::Zero(n),
                                         Eigen::VectorXd::Zero(n),
                                         Eigen::VectorXd::Zero(n)};
  for (int k = 1; k <= n_max; ++k) {
    const auto next = solver.sweep(prev);
    double sup = 0.0;
    for (int c = 0; c < 3; ++c) {
      const Eigen::VectorXd diff =
          next[static_cast<std::size_t>(c)] - prev[static_cast<std::size_t>(c)];
      sup = std::max(sup, diff.cwiseAbs().maxCoeff());
      out.min_increment = std::min(out.min_increment, diff.minCoeff());
    }
    out.sup_changes.push_back(sup);
    prev = next;
    if (sup < tol) {
      out.iterations = k;
      Eigen::VectorXd x(3 * n);
      for (int c = 0; c < 3; ++c) {
        x.segment(c * n, n) = prev[static_cast<std::size_t>(c)];
      }
      out.field =
          make_identity_field(grid, sys.points, x, "solve_iterative", true);
      return out;
    }
  }
  throw std::runtime_error(
      "solve_iterative: iteration limit reached before tolerance");
}

CdfField solve_time_dependent(const ModelParams& params,
                              const FrequencyGrid& grid, double dt,
                              double horizon, int damped_halfsteps,
                              int snapshot_stride) {
  require_solvable(params, "solve_time_dependent");
  if (!(dt > 0.0)) {
    throw std::invalid_argument("solve_time_dependent: need dt > 0");
  }
  if (damped_halfsteps < 0 || snapshot_stride < 1) {
    throw std::invalid_argument(
        "solve_time_dependent: bad startup or snapshot configuration");
  }
  const double startup_time = damped_halfsteps * dt / 2.0;
  if (!(horizon >= startup_time + dt)) {
    throw std::invalid_argument(
        "solve_time_dependent: horizon too short for the step configuration");
  }

  ModelParams relaxed = params;
  relaxed.nu = 0.0;  // the time-dependent system carries no decay term
  const auto sys = assemble_system(relaxed, grid, SystemKind::identity,
                                   BoundaryPairing::cross);
  const int n = sys.points_per_component();
  const int n3 = 3 * n;
  const int last = n - 1;

  // Row roles: the vanishing-side value relations and the mixed-pair ties
  // are instantaneous constraints; the two derivative relations keep a
  // damped time derivative (the factor 1/2 from the endpoint limit of the
  // evolution equations); everything else evolves.
  std::vector<double> role(static_cast<std::size_t>(n3), 1.0);
  const auto idx = [n](int component, int i) { return component * n + i; };
  role[static_cast<std::size_t>(idx(0, 0))] = 0.0;
  role[static_cast<std::size_t>(idx(1, 0))] = 0.0;
  role[static_cast<std::size_t>(idx(1, last))] = 0.0;
  role[static_cast<std::size_t>(idx(2, last))] = 0.0;
  role[static_cast<std::size_t>(idx(2, 0))] = -0.5;
  role[static_cast<std::size_t>(idx(0, last))] = -0.5;

  const auto build_stepper = [&](double theta, double step) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(12 * n));
    for (int outer = 0; outer < sys.matrix.outerSize(); ++outer) {
      for (SpMat::InnerIterator it(sys.matrix, outer); it; ++it) {
        const auto row = static_cast<std::size_t>(it.row());
        if (role[row] == 0.0) {
          trip.emplace_back(static_cast<int>(it.row()),
                            static_cast<int>(it.col()), it.value());
        } else {
          trip.emplace_back(static_cast<int>(it.row()),
                            static_cast<int>(it.col()),
                            -theta * step * role[row] * it.value());
        }
      }
    }
    for (int i = 0; i < n3; ++i) {
      if (role[static_cast<std::size_t>(i)] != 0.0) trip.emplace_back(i, i, 1.0);
    }
    SpMat left(n3, n3);
    left.setFromTriplets(trip.begin(), trip.end());
    left.makeCompressed();
    return left;
  };

  CdfField out;
  out.grid = grid;
  out.points = sys.points;
  out.monotone = true;
  out.min_increment = 0.0;

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n3);
  Eigen::VectorXd lap = Eigen::VectorXd::Zero(n3);
  double t = 0.0;

  const auto snapshot = [&]() {
    out.times.push_back(t);
    out.levels.push_back({f.segment(0, n), f.segment(n, n),
                          f.segment(2 * n, n)});
  };
  snapshot();  // F(0, .) = 0

  Eigen::SparseLU<SpMat> lu;
  const auto run_phase = [&](double theta, double step, long count) {
    if (count <= 0) return;
    const SpMat left = build_stepper(theta, step);
    lu.compute(left);
    if (lu.info() != Eigen::Success) {
      throw std::runtime_error("solve_time_dependent: step-size rejection");
    }
    for (long k = 0; k < count; ++k) {
      const Eigen::VectorXd residual = sys.matrix * f - sys.rhs;
      Eigen::VectorXd b(n3);
      for (int i = 0; i < n3; ++i) {
        const double s = role[static_cast<std::size_t>(i)];
        if (s == 0.0) {
          b[i] = sys.rhs[i];
        } else {
          b[i] = f[i] + (1.0 - theta) * step * s * residual[i] -
                 theta * step * s * sys.rhs[i];
        }
      }
      const Eigen::VectorXd next = lu.solve(b);
      const double worst = (next - f).minCoeff();
      out.min_increment = std::min(out.min_increment, worst);
      if (worst < -1e-9) out.monotone = false;
      const double weight = std::exp(-2.0 * params.nu * (t + 0.5 * step));
      lap += weight * (next - f);
      f = next;
      t += step;
      if (theta == 0.5 && (k + 1) % snapshot_stride == 0 && k + 1 < count) {
        snapshot();
      }
    }
  };

  run_phase(1.0, dt / 2.0, damped_halfsteps);
  const long full_steps =
      std::lround((horizon - startup_time) / dt);
  run_phase(0.5, dt, full_steps);
  snapshot();

  out.laplace = {lap.segment(0, n), lap.segment(n, n), lap.segment(2 * n, n)};
  return out;
}

double average_over_stationarity(const std::vector<double>& points,
                                 const Eigen::VectorXd& values,
                                 const diffusion::StationaryDensity& density) {
  if (points.size() != static_cast<std::size_t>(values.size())) {
    throw std::invalid_argument(
        "average_over_stationarity: points/values size mismatch");
  }
  std::vector<double> v(values.data(), values.data() + values.size());
  return density.average(points, v);
}

ConstantBaseline constant_p_baseline(double p0, const ModelParams& params) {
  require_solvable(params, "constant_p_baseline");
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument(
        "constant_p_baseline: p0 must lie strictly in (0,1)");
  }
  const double q0 = 1.0 - p0;
  const double coal_pp = 1.0 / (2.0 * p0);
  const double coal_qq = 1.0 / (2.0 * q0);
  const double mig_pq = 0.5 * (params.mu2 * q0 / p0 + params.r * q0);
  const double mig_qp = 0.5 * (params.mu1 * p0 / q0 + params.r * p0);

  const auto solve3 = [&](double shift, const Eigen::Vector3d& rhs) {
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    a(0, 0) = shift + coal_pp + 2.0 * mig_pq;
    a(0, 1) = -2.0 * mig_pq;
    a(1, 0) = -mig_qp;
    a(1, 1) = shift + mig_qp + mig_pq;
    a(1, 2) = -mig_pq;
    a(2, 1) = -2.0 * mig_qp;
    a(2, 2) = shift + coal_qq + 2.0 * mig_qp;
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    if (!lu.isInvertible()) {
      throw std::runtime_error("constant_p_baseline: singular system");
    }
    return Eigen::Vector3d(lu.solve(rhs));
  };

  ConstantBaseline out;
  const Eigen::Vector3d f =
      solve3(2.0 * params.nu, Eigen::Vector3d(coal_pp, 0.0, coal_qq));
  const Eigen::Vector3d tt = solve3(0.0, Eigen::Vector3d::Ones());
  out.f_pp = f(0);
  out.f_pq = f(1);
  out.f_qq = f(2);
  out.t_pp = tt(0);
  out.t_pq = tt(1);
  out.t_qq = tt(2);
  out.fbar = diffusion::pair_average(p0, f(0), f(1), f(2));
  out.tbar = diffusion::pair_average(p0, tt(0), tt(1), tt(2));
  return out;
}

}  // namespace coalbg::ode
