#include "coalbg/wf_exact.hpp"

#include <cmath>

namespace coalbg::wf {

namespace {

// log C(n,k) via lgamma; exact enough for n <= a few thousand.
double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

struct DeterministicStep {
  Eigen::VectorXd p_star, p_ss, mt_p, mt_q;
};

// Selection then mutation applied to each lattice frequency, plus the
// backward membership fractions of a lineage's parent, including the
// recombination escape route.
DeterministicStep deterministic_step(const ModelParams& pg, int two_n) {
  DeterministicStep d;
  d.p_star.resize(two_n + 1);
  d.p_ss.resize(two_n + 1);
  d.mt_p.resize(two_n + 1);
  d.mt_q.resize(two_n + 1);
  const double mu1 = pg.mu1, mu2 = pg.mu2, r = pg.r;
  for (int i = 0; i <= two_n; ++i) {
    double p = static_cast<double>(i) / two_n;
    double s = pg.selection(p);
    double den = 1.0 + s * p;
    if (!(den > 0.0) || 1.0 + s <= 0.0)
      throw std::domain_error("selection too strong for one generation");
    double ps = p * (1.0 + s) / den;
    double qs = 1.0 - ps;
    double pss = (1.0 - mu1) * ps + mu2 * qs;
    double qss = 1.0 - pss;
    double m_p = (pss > 0.0) ? mu2 * qs / pss : 1.0;
    double m_q = (qss > 0.0) ? mu1 * ps / qss : 1.0;
    d.p_star(i) = ps;
    d.p_ss(i) = pss;
    d.mt_p(i) = r * (1.0 - m_q) * qss + (1.0 - r * qss) * m_p;
    d.mt_q(i) = r * pss * (1.0 - m_p) + (1.0 - r * pss) * m_q;
  }
  return d;
}

}  // namespace

Eigen::MatrixXd transition_matrix(const ModelParams& per_generation) {
  if (per_generation.scale != Scale::per_generation || !per_generation.N)
    throw std::invalid_argument("transition matrix needs per-generation parameters with N");
  const int two_n = 2 * *per_generation.N;
  auto d = deterministic_step(per_generation, two_n);
  Eigen::MatrixXd P(two_n + 1, two_n + 1);
  for (int i = 0; i <= two_n; ++i) {
    double x = d.p_ss(i);
    if (x <= 0.0) {
      P.row(i).setZero();
      P(i, 0) = 1.0;
    } else if (x >= 1.0) {
      P.row(i).setZero();
      P(i, two_n) = 1.0;
    } else {
      double lx = std::log(x), l1x = std::log1p(-x);
      for (int j = 0; j <= two_n; ++j)
        P(i, j) = std::exp(log_choose(two_n, j) + j * lx + (two_n - j) * l1x);
      P.row(i) /= P.row(i).sum();
    }
  }
  return P;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double tol,
                                        int max_iter) {
  const int n = static_cast<int>(P.rows());
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd nxt = P.transpose() * psi;
    nxt /= nxt.sum();
    double change = (nxt - psi).lpNorm<1>();
    psi = nxt;
    if (change < tol) return psi;
  }
  throw std::runtime_error("stationary distribution did not converge");
}

Eigen::MatrixXd reversed_chain(const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(P.rows());
  Eigen::MatrixXd G(n, n);
  for (int j = 0; j < n; ++j) {
    if (!(psi(j) > 0.0))
      throw std::domain_error("time reversal needs a strictly positive stationary law");
    for (int i = 0; i < n; ++i) G(j, i) = psi(i) * P(i, j) / psi(j);
    G.row(j) /= G.row(j).sum();
  }
  return G;
}

double detailed_balance_violation(const Eigen::MatrixXd& P,
                                  const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(P.rows());
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(psi(i) * P(i, j) - psi(j) * P(j, i)));
  return worst;
}

IdentityRecursion::IdentityRecursion(const ModelParams& per_generation) {
  per_generation.require_positive_mutation();
  if (per_generation.scale != Scale::per_generation || !per_generation.N)
    throw std::invalid_argument("identity recursion needs per-generation parameters with N");
  two_n_ = 2 * *per_generation.N;
  double nu = per_generation.nu;
  nu_factor_ = (1.0 - nu) * (1.0 - nu);
  auto d = deterministic_step(per_generation, two_n_);
  mt_p_ = d.mt_p;
  mt_q_ = d.mt_q;
  fwd_ = transition_matrix(per_generation);
  psi_ = stationary_distribution(fwd_);
  gamma_ = reversed_chain(fwd_, psi_);
}

std::array<Eigen::VectorXd, 3> IdentityRecursion::apply(
    const std::array<Eigen::VectorXd, 3>& f) const {
  const int n = two_n_ + 1;
  const Eigen::VectorXd& fpp = f[0];
  const Eigen::VectorXd& fpq = f[1];
  const Eigen::VectorXd& fqq = f[2];
  Eigen::VectorXd a_pp(n), a_pq(n), a_qq(n);
  for (int i = 0; i < n; ++i) {
    double mp = mt_p_(i), mq = mt_q_(i);
    a_pp(i) = fqq(i) * mp * mp + 2.0 * fpq(i) * mp * (1.0 - mp) +
              fpp(i) * (1.0 - mp) * (1.0 - mp);
    a_pq(i) = fqq(i) * (1.0 - mq) * mp +
              fpq(i) * (mp * mq + (1.0 - mq) * (1.0 - mp)) +
              fpp(i) * mq * (1.0 - mp);
    a_qq(i) = fqq(i) * (1.0 - mq) * (1.0 - mq) +
              2.0 * fpq(i) * mq * (1.0 - mq) + fpp(i) * mq * mq;
  }
  Eigen::VectorXd s_pp = gamma_ * a_pp;
  Eigen::VectorXd s_pq = gamma_ * a_pq;
  Eigen::VectorXd s_qq = gamma_ * a_qq;
  std::array<Eigen::VectorXd, 3> out{Eigen::VectorXd(n), Eigen::VectorXd(n),
                                     Eigen::VectorXd(n)};
  for (int j = 0; j < n; ++j) {
    double cp = (j >= 1) ? 1.0 / j : 0.0;
    double cq = (j <= two_n_ - 1) ? 1.0 / (two_n_ - j) : 0.0;
    out[0](j) = nu_factor_ * (s_pp(j) + (1.0 - s_pp(j)) * cp);
    out[1](j) = nu_factor_ * s_pq(j);
    out[2](j) = nu_factor_ * (s_qq(j) + (1.0 - s_qq(j)) * cq);
  }
  // Single-copy backgrounds coalesce immediately; empty ones are undefined.
  out[0](0) = 0.0;
  out[0](1) = 1.0;
  out[2](two_n_) = 0.0;
  out[2](two_n_ - 1) = 1.0;
  out[1](0) = 0.0;
  out[1](two_n_) = 0.0;
  return out;
}

IdentityVector identity_fixed_point(const ModelParams& per_generation,
                                    double tol, int max_iter) {
  IdentityRecursion rec(per_generation);
  const int n = rec.two_n() + 1;
  std::array<Eigen::VectorXd, 3> f{Eigen::VectorXd::Zero(n),
                                   Eigen::VectorXd::Zero(n),
                                   Eigen::VectorXd::Zero(n)};
  IdentityVector out;
  out.two_n = rec.two_n();
  for (int it = 1; it <= max_iter; ++it) {
    auto nf = rec.apply(f);
    double change = 0.0;
    for (int c = 0; c < 3; ++c)
      change = std::max(change, (nf[c] - f[c]).lpNorm<Eigen::Infinity>());
    f = std::move(nf);
    if (change < tol) {
      out.iterations = it;
      break;
    }
    if (it == max_iter)
      throw std::runtime_error("identity recursion did not converge");
  }
  auto to_std = [n](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + n);
  };
  out.f_pp = to_std(f[0]);
  out.f_pq = to_std(f[1]);
  out.f_qq = to_std(f[2]);
  return out;
}

}  // namespace coalbg::wf
