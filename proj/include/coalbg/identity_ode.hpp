#pragma once
// Coupled second-order boundary-value systems on the frequency interval:
// identity-in-state probabilities for a linked pair, their time-dependent
// coalescence CDFs, and mean coalescence times.  The endpoint equations are
// the dominant-balance relations obtained by multiplying each equation by
// 2p (resp. 2q) and letting the frequency reach the end.

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "coalbg/core.hpp"
#include "coalbg/diffusion.hpp"

namespace coalbg::ode {

enum class SystemKind { identity, mean_time };

// Which endpoint value the mixed-configuration component is tied to.  The
// balanced limit ties PQ at p=0 to the QQ value and PQ at p=1 to the PP
// value ("cross"); the transposed variant ("transposed") is kept for
// regression because combining it with the PP endpoint relation forces
// f_PP(0) = 1 identically.
enum class BoundaryPairing { cross, transposed };

// One endpoint relation: sum over (flat index, coefficient) == rhs, where
// flat index = component * points_per_component + point index.
struct BoundaryRelation {
  int component = 0;   // 0 = PP, 1 = PQ, 2 = QQ
  int point = 0;       // grid-point index (0 or last)
  std::vector<std::pair<int, double>> coefficients;
  double rhs = 0.0;
};

std::vector<BoundaryRelation> boundary_conditions(
    const ModelParams& params, const FrequencyGrid& grid,
    SystemKind kind = SystemKind::identity,
    BoundaryPairing pairing = BoundaryPairing::cross);

// The full discretized linear system A x = rhs over the three components
// stacked on the closed grid (endpoints included, closed by the boundary
// relations).  x components are ordered PP, PQ, QQ.
struct AssembledSystem {
  FrequencyGrid grid;
  std::vector<double> points;  // closed grid: 0, interior..., 1
  double h = 0.0;
  SystemKind kind = SystemKind::identity;
  BoundaryPairing pairing = BoundaryPairing::cross;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;

  int points_per_component() const { return static_cast<int>(points.size()); }
  int index(int component, int i) const {
    return component * points_per_component() + i;
  }
};

AssembledSystem assemble_system(
    const ModelParams& params, const FrequencyGrid& grid,
    SystemKind kind = SystemKind::identity,
    BoundaryPairing pairing = BoundaryPairing::cross);

// Identity-in-state probabilities by sample configuration on the closed grid.
struct IdentityField {
  FrequencyGrid grid;
  std::vector<double> points;
  Eigen::VectorXd f_pp, f_pq, f_qq;
  Eigen::VectorXd fbar;  // p^2 f_PP + 2pq f_PQ + q^2 f_QQ pointwise
};

IdentityField solve_direct(const ModelParams& params, const FrequencyGrid& grid,
                           BoundaryPairing pairing = BoundaryPairing::cross);

// Mean coalescence times (unit: the continuum time scale) per configuration.
struct TimeField {
  FrequencyGrid grid;
  std::vector<double> points;
  Eigen::VectorXd t_pp, t_pq, t_qq;
  Eigen::VectorXd tbar;
};

TimeField mean_coalescence_times(const ModelParams& params,
                                 const FrequencyGrid& grid);

// One stage of the monotone scheme: solve the three decoupled systems with
// every cross-component term evaluated at the previous iterate.
std::array<Eigen::VectorXd, 3> iterative_sweep(
    const AssembledSystem& system,
    const std::array<Eigen::VectorXd, 3>& previous);

struct IterativeSolution {
  IdentityField field;
  int iterations = 0;
  std::vector<double> sup_changes;  // per-stage sup-norm change
  double min_increment = 0.0;       // most negative pointwise step observed
};

IterativeSolution solve_iterative(const ModelParams& params,
                                  const FrequencyGrid& grid, int n_max = 200,
                                  double tol = 1e-10);

// Time-dependent coalescence CDFs F(t, p) by configuration, integrated from
// F(0, .) = 0 with implicit trapezoidal stepping; a few damped half-steps
// open the integration because the endpoint relations are algebraic
// constraints that the zero initial state does not satisfy.  The resolvent
// accumulator integrates exp(-2 nu t) dF alongside, for cross-checking
// against the stationary identity solve at the same nu.
struct CdfField {
  FrequencyGrid grid;
  std::vector<double> points;
  std::vector<double> times;  // snapshot times, starting at 0
  std::vector<std::array<Eigen::VectorXd, 3>> levels;
  std::array<Eigen::VectorXd, 3> laplace;
  bool monotone = false;     // F was nondecreasing in t at every point
  double min_increment = 0;  // most negative per-step change observed
};

CdfField solve_time_dependent(const ModelParams& params,
                              const FrequencyGrid& grid, double dt,
                              double horizon, int damped_halfsteps = 4,
                              int snapshot_stride = 100);

// Expectation of a tabulated field under the stationary frequency law.
double average_over_stationarity(const std::vector<double>& points,
                                 const Eigen::VectorXd& values,
                                 const diffusion::StationaryDensity& density);

// Two lineages at a frequency pinned to p0: the p-derivative terms drop and
// each system collapses to a 3x3 linear solve.
struct ConstantBaseline {
  double f_pp = 0, f_pq = 0, f_qq = 0;
  double t_pp = 0, t_pq = 0, t_qq = 0;
  double fbar = 0, tbar = 0;
};

ConstantBaseline constant_p_baseline(double p0, const ModelParams& params);

}  // namespace coalbg::ode
