#pragma once
// Exact finite-N discrete-generation machinery: forward allele-count chain,
// its stationary law and time reversal, and the fixed point of the
// identity-in-state recursion for a sample of two at the linked neutral
// locus.

#include <Eigen/Dense>
#include <array>

#include "coalbg/core.hpp"

namespace coalbg::wf {

// Identity-in-state probabilities indexed by selected-allele count
// j = 0..2N, one entry per ordered background pair.  Slots where the
// conditioning event is impossible (no pair available) are stored as 0
// and reported as undefined.
struct IdentityVector {
  int two_n = 0;
  std::vector<double> f_pp, f_pq, f_qq;
  int iterations = 0;

  double p_of(int j) const { return static_cast<double>(j) / two_n; }
  bool pp_defined(int j) const { return j >= 1; }
  bool pq_defined(int j) const { return j >= 1 && j <= two_n - 1; }
  bool qq_defined(int j) const { return j <= two_n - 1; }
};

// Row-stochastic (2N+1)x(2N+1) matrix: selection then mutation move the
// expected frequency, then binomial resampling of 2N copies.
Eigen::MatrixXd transition_matrix(const ModelParams& per_generation);

// Stationary row vector by power iteration to an l1 increment below tol.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P,
                                        double tol = 1e-12,
                                        int max_iter = 2000000);

// Backward chain: G(j,i) = psi(i) P(i,j) / psi(j).
Eigen::MatrixXd reversed_chain(const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& psi);

// max_{i,j} |psi_i P_ij - psi_j P_ji|
double detailed_balance_violation(const Eigen::MatrixXd& P,
                                  const Eigen::VectorXd& psi);

// Precomputed pieces of one sweep of the identity recursion, exposed so a
// direct linear solve of the same affine map can cross-check the fixed
// point on small chains.
class IdentityRecursion {
 public:
  explicit IdentityRecursion(const ModelParams& per_generation);

  // One backward sweep: ancestral mixing, reversed-chain averaging,
  // within-background coalescence, neutral mutation discount, then pins.
  std::array<Eigen::VectorXd, 3> apply(
      const std::array<Eigen::VectorXd, 3>& f) const;

  int two_n() const { return two_n_; }
  const Eigen::VectorXd& stationary() const { return psi_; }
  const Eigen::MatrixXd& backward() const { return gamma_; }
  const Eigen::MatrixXd& forward() const { return fwd_; }

 private:
  int two_n_;
  double nu_factor_;
  Eigen::MatrixXd fwd_, gamma_;
  Eigen::VectorXd psi_, mt_p_, mt_q_;
};

IdentityVector identity_fixed_point(const ModelParams& per_generation,
                                    double tol = 1e-10,
                                    int max_iter = 200000);

}  // namespace coalbg::wf
