#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "coalbg/core.hpp"
#include "coalbg/wf_exact.hpp"

using namespace coalbg;

namespace {

ModelParams per_gen(int N, double mu1, double mu2, double r, double nu,
                    double s0, double p0) {
  ModelParams m;
  m.mu1 = mu1;
  m.mu2 = mu2;
  m.r = r;
  m.nu = nu;
  m.selection = s0 == 0.0 ? SelectionProfile::directional(0.0)
                          : SelectionProfile::balancing(s0, p0);
  m.N = N;
  m.scale = Scale::per_generation;
  return m;
}

ModelParams fig1_params() { return per_gen(50, 0.0005, 0.0005, 0.0, 0.002, 0.16, 0.5); }

}  // namespace

TEST_CASE("neutral two-copy chain reproduces the binomial row") {
  auto P = wf::transition_matrix(per_gen(1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5));
  REQUIRE(P.rows() == 3);
  CHECK(P(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(P(1, 1) == doctest::Approx(0.50).epsilon(1e-12));
  CHECK(P(1, 2) == doctest::Approx(0.25).epsilon(1e-12));
  // without mutation the monomorphic states absorb
  CHECK(P(0, 0) == 1.0);
  CHECK(P(2, 2) == 1.0);
}

TEST_CASE("transition rows are probability vectors") {
  auto P = wf::transition_matrix(fig1_params());
  REQUIRE(P.rows() == 101);
  for (int i = 0; i < P.rows(); ++i) {
    CHECK(P.row(i).minCoeff() >= 0.0);
    CHECK(P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // mutation keeps the chain off the absorbing corners
  CHECK(P(0, 0) < 1.0);
  CHECK(P(100, 100) < 1.0);
}

TEST_CASE("stationary law matches a direct eigen-solve on a small chain") {
  auto params = per_gen(1, 0.1, 0.25, 0.0, 0.0, 0.3, 0.4);
  auto P = wf::transition_matrix(params);
  auto psi = wf::stationary_distribution(P);
  CHECK(psi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psi.minCoeff() > 0.0);
  CHECK((P.transpose() * psi - psi).lpNorm<1>() < 1e-10);

  // independent route: null space of (P^T - I) with a normalization row
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(3, 3);
  A.row(2).setOnes();
  Eigen::Vector3d b(0.0, 0.0, 1.0);
  Eigen::Vector3d direct = A.fullPivLu().solve(b);
  for (int i = 0; i < 3; ++i)
    CHECK(psi(i) == doctest::Approx(direct(i)).epsilon(1e-9));
}

TEST_CASE("stationary law is invariant at larger size") {
  auto P = wf::transition_matrix(per_gen(10, 0.01, 0.02, 0.0, 0.0, 0.3, 0.5));
  auto psi = wf::stationary_distribution(P);
  CHECK(psi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((P.transpose() * psi - psi).lpNorm<1>() < 1e-10);
}

TEST_CASE("time reversal follows the conditional-probability identity") {
  auto P = wf::transition_matrix(per_gen(1, 0.1, 0.25, 0.0, 0.0, 0.3, 0.4));
  auto psi = wf::stationary_distribution(P);
  auto G = wf::reversed_chain(P, psi);
  for (int j = 0; j < 3; ++j) {
    CHECK(G.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
      CHECK(G(j, i) == doctest::Approx(psi(i) * P(i, j) / psi(j)).epsilon(1e-10));
  }
  // flow balance: stationary flow j<-i equals forward flow i->j
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(psi(j) * G(j, i) == doctest::Approx(psi(i) * P(i, j)).epsilon(1e-12));
}

TEST_CASE("discrete-generation chain is measurably irreversible") {
  auto P = wf::transition_matrix(fig1_params());
  auto psi = wf::stationary_distribution(P);
  CHECK(wf::detailed_balance_violation(P, psi) > 1e-6);
}

TEST_CASE("identity fixed point agrees with a direct affine solve at 2N=4") {
  auto params = per_gen(2, 0.1, 0.2, 0.3, 0.05, 0.5, 0.4);
  wf::IdentityRecursion rec(params);
  const int n = rec.two_n() + 1;
  const int dim = 3 * n;

  auto pack = [n](const std::array<Eigen::VectorXd, 3>& f) {
    Eigen::VectorXd v(3 * n);
    for (int c = 0; c < 3; ++c) v.segment(c * n, n) = f[c];
    return v;
  };
  auto unpack = [n](const Eigen::VectorXd& v) {
    std::array<Eigen::VectorXd, 3> f{v.segment(0, n), v.segment(n, n),
                                     v.segment(2 * n, n)};
    return f;
  };

  std::array<Eigen::VectorXd, 3> zero{Eigen::VectorXd::Zero(n),
                                      Eigen::VectorXd::Zero(n),
                                      Eigen::VectorXd::Zero(n)};
  Eigen::VectorXd c = pack(rec.apply(zero));
  Eigen::MatrixXd M(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e(k) = 1.0;
    M.col(k) = pack(rec.apply(unpack(e))) - c;
  }
  Eigen::VectorXd direct =
      (Eigen::MatrixXd::Identity(dim, dim) - M).fullPivLu().solve(c);

  auto fixed = wf::identity_fixed_point(params, 1e-13);
  for (int j = 0; j < n; ++j) {
    CHECK(fixed.f_pp[j] == doctest::Approx(direct(j)).epsilon(1e-9));
    CHECK(fixed.f_pq[j] == doctest::Approx(direct(n + j)).epsilon(1e-9));
    CHECK(fixed.f_qq[j] == doctest::Approx(direct(2 * n + j)).epsilon(1e-9));
  }
}

TEST_CASE("identity vector pins, masks, and range") {
  auto params = per_gen(10, 0.002, 0.003, 0.001, 0.01, 0.2, 0.5);
  auto f = wf::identity_fixed_point(params);
  const int tn = f.two_n;
  REQUIRE(tn == 20);
  CHECK(f.f_pp[1] == 1.0);
  CHECK(f.f_qq[tn - 1] == 1.0);
  CHECK_FALSE(f.pp_defined(0));
  CHECK_FALSE(f.qq_defined(tn));
  CHECK_FALSE(f.pq_defined(0));
  CHECK_FALSE(f.pq_defined(tn));
  CHECK(f.f_pp[0] == 0.0);
  CHECK(f.f_qq[tn] == 0.0);
  for (int j = 0; j <= tn; ++j) {
    if (f.pp_defined(j)) {
      CHECK(f.f_pp[j] > 0.0);
      CHECK(f.f_pp[j] <= 1.0);
    }
    if (f.pq_defined(j)) {
      CHECK(f.f_pq[j] > 0.0);
      CHECK(f.f_pq[j] < 1.0);
    }
    if (f.qq_defined(j)) {
      CHECK(f.f_qq[j] > 0.0);
      CHECK(f.f_qq[j] <= 1.0);
    }
  }
}

TEST_CASE("mirror symmetry under label exchange") {
  // Exact only without selection: a relative advantage s of one allele is
  // not advantage -s of the other (it is -s/(1+s)), so selective cases are
  // mirror-symmetric only to O(s^2).
  auto params = per_gen(8, 0.01, 0.01, 0.02, 0.05, 0.0, 0.5);
  auto f = wf::identity_fixed_point(params, 1e-12);
  const int tn = f.two_n;
  for (int j = 0; j <= tn; ++j) {
    CHECK(f.f_pp[j] == doctest::Approx(f.f_qq[tn - j]).epsilon(1e-9));
    CHECK(f.f_pq[j] == doctest::Approx(f.f_pq[tn - j]).epsilon(1e-9));
  }
}

TEST_CASE("swapping mutation rates mirrors the identity vector") {
  auto a = wf::identity_fixed_point(per_gen(6, 0.02, 0.07, 0.01, 0.03, 0.0, 0.5), 1e-12);
  auto b = wf::identity_fixed_point(per_gen(6, 0.07, 0.02, 0.01, 0.03, 0.0, 0.5), 1e-12);
  for (int j = 0; j <= 12; ++j) {
    CHECK(a.f_pp[j] == doctest::Approx(b.f_qq[12 - j]).epsilon(1e-9));
    CHECK(a.f_pq[j] == doctest::Approx(b.f_pq[12 - j]).epsilon(1e-9));
  }
}

TEST_CASE("identity decreases when the neutral locus mutates faster") {
  auto lo = wf::identity_fixed_point(per_gen(6, 0.01, 0.01, 0.0, 0.002, 0.2, 0.5));
  auto hi = wf::identity_fixed_point(per_gen(6, 0.01, 0.01, 0.0, 0.02, 0.2, 0.5));
  for (int j = 0; j <= 12; ++j) {
    if (lo.pq_defined(j)) CHECK(hi.f_pq[j] < lo.f_pq[j]);
    if (j >= 2) CHECK(hi.f_pp[j] < lo.f_pp[j]);
    if (j <= 10) CHECK(hi.f_qq[j] < lo.f_qq[j]);
  }
}

TEST_CASE("recursion rejects parameters outside its domain") {
  CHECK_THROWS(wf::identity_fixed_point(per_gen(4, 0.0, 0.01, 0.0, 0.01, 0.0, 0.5)));
  ModelParams diff = per_gen(4, 0.01, 0.01, 0.0, 0.01, 0.2, 0.5);
  diff.scale = Scale::diffusion;
  CHECK_THROWS(wf::transition_matrix(diff));
  ModelParams no_n = per_gen(4, 0.01, 0.01, 0.0, 0.01, 0.2, 0.5);
  no_n.N.reset();
  CHECK_THROWS(wf::transition_matrix(no_n));
}
