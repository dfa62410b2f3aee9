#include "coalbg/moran.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <tuple>

namespace coalbg::moran {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

int require_event_n(const ModelParams& event) {
  if (!event.N) throw std::invalid_argument("event-scale model needs N");
  return 2 * *event.N;
}

// Relative reproductive weight of the selected allele per event.
double s_weight(const ModelParams& event, double p) {
  double s = event.selection(p);
  if (2.0 + s <= 0.0) throw std::domain_error("selection too strong per event");
  return s / (2.0 + s);
}

JumpProbs jump_probs_at(const ModelParams& event, int two_n, int j) {
  double p = static_cast<double>(j) / two_n;
  double q = 1.0 - p;
  double sw = s_weight(event, p);
  JumpProbs jp;
  jp.down = p * (p * event.mu1 + q * (1.0 - sw) * (1.0 - event.mu2));
  jp.up = q * (q * event.mu2 + p * (1.0 + sw) * (1.0 - event.mu1));
  return jp;
}

}  // namespace

JumpProbs jump_probs(const ModelParams& event, int j) {
  return jump_probs_at(event, require_event_n(event), j);
}

double stay_probability(const ModelParams& event, int j) {
  int two_n = require_event_n(event);
  double p = static_cast<double>(j) / two_n;
  double q = 1.0 - p;
  double sw = s_weight(event, p);
  return p * p * (1.0 - event.mu1) + q * q * (1.0 - event.mu2) +
         2.0 * p * q *
             (0.5 * (1.0 + sw) * event.mu1 + 0.5 * (1.0 - sw) * event.mu2);
}

std::vector<double> stationary_distribution(const ModelParams& event) {
  event.require_positive_mutation();
  int two_n = require_event_n(event);
  std::vector<double> log_psi(two_n + 1, 0.0);
  for (int j = 0; j < two_n; ++j) {
    auto here = jump_probs_at(event, two_n, j);
    auto next = jump_probs_at(event, two_n, j + 1);
    log_psi[j + 1] = log_psi[j] + std::log(here.up) - std::log(next.down);
  }
  double shift = *std::max_element(log_psi.begin(), log_psi.end());
  std::vector<double> psi(two_n + 1);
  double total = 0.0;
  for (int j = 0; j <= two_n; ++j) {
    psi[j] = std::exp(log_psi[j] - shift);
    total += psi[j];
  }
  for (auto& x : psi) x /= total;
  return psi;
}

Eigen::MatrixXd transition_matrix(const ModelParams& event) {
  int two_n = require_event_n(event);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(two_n + 1, two_n + 1);
  for (int j = 0; j <= two_n; ++j) {
    auto jp = jump_probs_at(event, two_n, j);
    if (j > 0) P(j, j - 1) = jp.down;
    if (j < two_n) P(j, j + 1) = jp.up;
    P(j, j) = 1.0 - jp.down - jp.up;
  }
  return P;
}

double detailed_balance_violation(const ModelParams& event) {
  int two_n = require_event_n(event);
  auto psi = stationary_distribution(event);
  double worst = 0.0;
  for (int j = 0; j < two_n; ++j) {
    auto here = jump_probs_at(event, two_n, j);
    auto next = jump_probs_at(event, two_n, j + 1);
    worst = std::max(worst, std::abs(psi[j] * here.up - psi[j + 1] * next.down));
  }
  return worst;
}

bool BackwardGenerator::feasible(Config c, int j) const {
  auto st = config_state(c);
  return st.n1 <= j && st.n2 <= two_n_ - j;
}

BackwardGenerator::BackwardGenerator(const ModelParams& event) {
  event.require_positive_mutation();
  two_n_ = require_event_n(event);
  const int two_n = two_n_;
  const double n_half = 0.5 * two_n;  // replacement events per unit time
  const double mu1 = event.mu1, mu2 = event.mu2, r = event.r;

  std::vector<JumpProbs> jp(two_n + 1);
  for (int j = 0; j <= two_n; ++j) jp[j] = jump_probs_at(event, two_n, j);

  for (int c = 0; c < 3; ++c) {
    table_[c].assign(two_n + 1, {});
    total_[c].assign(two_n + 1, 0.0);
  }

  auto c2 = [](double n) { return 0.5 * n * (n - 1.0); };

  for (int ci = 0; ci < 3; ++ci) {
    Config cfg = static_cast<Config>(ci);
    auto st = config_state(cfg);
    const int n1 = st.n1, n2 = st.n2;
    for (int j = 0; j <= two_n; ++j) {
      if (!feasible(cfg, j)) continue;
      double p = static_cast<double>(j) / two_n;
      double q = 1.0 - p;
      double sw = s_weight(event, p);
      double copies_p = j, copies_q = two_n - j;
      double pair_p =
          (n1 >= 2 && copies_p >= 2) ? c2(n1) / c2(copies_p) : 0.0;
      double pair_q =
          (n2 >= 2 && copies_q >= 2) ? c2(n2) / c2(copies_q) : 0.0;
      double cross = (n1 >= 1 && n2 >= 1 && copies_p > 0 && copies_q > 0)
                         ? n1 * n2 / (copies_p * copies_q)
                         : 0.0;
      double mig_p_free = (n1 >= 1 && copies_p > 0 && copies_q > 0)
                              ? n1 * (copies_q - n2) / (copies_p * copies_q)
                              : 0.0;
      double mig_q_free = (n2 >= 1 && copies_p > 0 && copies_q > 0)
                              ? n2 * (copies_p - n1) / (copies_p * copies_q)
                              : 0.0;

      double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0, t6 = 0;
      if (j >= 1 && jp[j].down > 0.0) {
        double pm = static_cast<double>(j - 1) / two_n;
        double qm = 1.0 - pm;
        double sm = s_weight(event, pm);
        double denom = jp[j - 1].up;
        double c_min = denom > 0.0 ? jp[j].down / denom : 0.0;
        double sel_m = pm * qm * (1.0 + sm) * (1.0 - mu1);
        t1 = n_half * (1.0 - r) * c_min *
             (pair_p * sel_m + cross * qm * q * mu2);
        t2 = n_half * c_min *
             (mig_p_free * qm * q * mu2 +
              (copies_p > 0 ? r * n1 / copies_p : 0.0) * sel_m +
              (copies_p > 0 ? n1 / copies_p : 0.0) * qm * mu2 / two_n);
        t3 = std::max(0.0, n_half * jp[j].down - t1 - t2);
      }
      if (j <= two_n - 1 && jp[j].up > 0.0) {
        double pp1 = static_cast<double>(j + 1) / two_n;
        double qp1 = 1.0 - pp1;
        double sp1 = s_weight(event, pp1);
        double denom = jp[j + 1].down;
        double c_pl = denom > 0.0 ? jp[j].up / denom : 0.0;
        double sel_p = pp1 * qp1 * (1.0 - sp1) * (1.0 - mu2);
        t4 = n_half * (1.0 - r) * c_pl *
             (pair_q * sel_p + cross * pp1 * p * mu1);
        t5 = n_half * c_pl *
             (mig_q_free * pp1 * p * mu1 +
              (copies_q > 0 ? r * n2 / copies_q : 0.0) * sel_p +
              (copies_q > 0 ? n2 / copies_q : 0.0) * pp1 * mu1 / two_n);
        t6 = std::max(0.0, n_half * jp[j].up - t4 - t5);
      }
      double pm1 = j >= 1 ? static_cast<double>(j - 1) / two_n : 0.0;
      double pp1 = j <= two_n - 1 ? static_cast<double>(j + 1) / two_n : 1.0;
      double t7 = n_half * (1.0 - r) *
                  (pair_p * p * pm1 * (1.0 - mu1) +
                   cross * p * q * (1.0 - sw) * mu2);
      double t8 = n_half * (1.0 - r) *
                  (pair_q * q * (1.0 - pp1) * (1.0 - mu2) +
                   cross * p * q * (1.0 + sw) * mu1);
      double t9 = n_half * (1.0 - r) * mig_p_free * p * q * (1.0 - sw) * mu2;
      double t10 = n_half * (1.0 - r) * mig_q_free * p * q * (1.0 + sw) * mu1;

      struct Raw {
        double rate;
        int j, n1, n2;
        bool down_move;
      };
      Raw raw[10] = {
          {t1, j - 1, n1 - 1, n2, true},      {t2, j - 1, n1 - 1, n2 + 1, true},
          {t3, j - 1, n1, n2, true},          {t4, j + 1, n1, n2 - 1, false},
          {t5, j + 1, n1 + 1, n2 - 1, false}, {t6, j + 1, n1, n2, false},
          {t7, j, n1 - 1, n2, true},          {t8, j, n1, n2 - 1, false},
          {t9, j, n1 - 1, n2 + 1, true},      {t10, j, n1 + 1, n2 - 1, false},
      };
      std::map<std::tuple<int, int, int>, double> merged;
      for (const auto& t : raw) {
        if (!(t.rate > 0.0)) continue;
        int tj = t.j, tn1 = t.n1, tn2 = t.n2;
        if (tn1 + tn2 >= 2 && (tn1 > tj || tn2 > two_n - tj)) {
          // forced migration: the lineage on the vanished background moves
          if (t.down_move) {
            --tn1;
            ++tn2;
          } else {
            ++tn1;
            --tn2;
          }
          if (tn1 + tn2 >= 2 && (tn1 > tj || tn2 > two_n - tj))
            throw std::logic_error("unroutable backward transition");
        }
        merged[{tj, tn1, tn2}] += t.rate;
      }
      auto& list = table_[ci][j];
      for (const auto& [key, rate] : merged) {
        auto [tj, tn1, tn2] = key;
        Transition tr;
        tr.rate = rate;
        tr.next_j = tj;
        if (tn1 + tn2 <= 1) {
          tr.coalesced = true;
          tr.terminal = tn1 == 1 ? 0 : 1;
        } else {
          tr.coalesced = false;
          tr.next_config = tn1 == 2 ? Config::pp
                           : tn1 == 1 ? Config::pq
                                      : Config::qq;
          tr.migration = tr.next_config != cfg;
        }
        list.push_back(tr);
        total_[ci][j] += rate;
      }
    }
  }
}

const std::vector<BackwardGenerator::Transition>& BackwardGenerator::transitions(
    Config c, int j) const {
  return table_[static_cast<int>(c)][j];
}

double BackwardGenerator::total_rate(Config c, int j) const {
  return total_[static_cast<int>(c)][j];
}

namespace {

// Solve (diag + shift - rates) x = source over the feasible states, where
// coalescence transitions contribute absorb_value to the right-hand side.
ConditionalField solve_resolvent(const ModelParams& event, double shift,
                                 double source, double absorb_value,
                                 double single_copy_value) {
  BackwardGenerator gen(event);
  const int two_n = gen.two_n();
  std::vector<int> compact(3 * (two_n + 1), -1);
  std::vector<std::pair<Config, int>> states;
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j <= two_n; ++j)
      if (gen.feasible(static_cast<Config>(c), j)) {
        compact[c * (two_n + 1) + j] = static_cast<int>(states.size());
        states.emplace_back(static_cast<Config>(c), j);
      }
  const int n = static_cast<int>(states.size());
  Eigen::SparseMatrix<double> A(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, source);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(8 * n);
  for (int k = 0; k < n; ++k) {
    auto [cfg, j] = states[k];
    trip.emplace_back(k, k, gen.total_rate(cfg, j) + shift);
    for (const auto& t : gen.transitions(cfg, j)) {
      if (t.coalesced) {
        rhs(k) += t.rate * absorb_value;
      } else {
        int kk = compact[static_cast<int>(t.next_config) * (two_n + 1) + t.next_j];
        trip.emplace_back(k, kk, -t.rate);
      }
    }
  }
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("backward resolvent factorization failed");
  Eigen::VectorXd x = lu.solve(rhs);
  ConditionalField out;
  out.two_n = two_n;
  for (int c = 0; c < 3; ++c) out.value[c].assign(two_n + 1, kNan);
  for (int k = 0; k < n; ++k) {
    auto [cfg, j] = states[k];
    out.value[static_cast<int>(cfg)][j] = x(k);
  }
  // a pair forced onto a single copy has coalesced on the spot
  out.value[0][1] = single_copy_value;
  out.value[2][two_n - 1] = single_copy_value;
  return out;
}

}  // namespace

ConditionalField identity_resolvent(const ModelParams& event) {
  return solve_resolvent(event, 2.0 * event.nu, 0.0, 1.0, 1.0);
}

ConditionalField mean_time_resolvent(const ModelParams& event) {
  return solve_resolvent(event, 0.0, 1.0, 0.0, 0.0);
}

std::array<double, 3> pair_weights(int two_n, int j) {
  double tn = two_n;
  double w_pp = j * (j - 1.0) / (tn * (tn - 1.0));
  double w_qq = (tn - j) * (tn - j - 1.0) / (tn * (tn - 1.0));
  return {w_pp, 1.0 - w_pp - w_qq, w_qq};
}

namespace {

double label_blind_average(const ModelParams& event,
                           const ConditionalField& field) {
  auto psi = stationary_distribution(event);
  const int two_n = field.two_n;
  std::vector<double> terms(two_n + 1);
  for (int j = 0; j <= two_n; ++j) {
    auto w = pair_weights(two_n, j);
    double v = 0.0;
    for (int c = 0; c < 3; ++c)
      if (w[c] > 0.0) v += w[c] * field.value[c][j];
    terms[j] = psi[j] * v;
  }
  return pairwise_sum(terms);
}

}  // namespace

double average_identity(const ModelParams& event) {
  return label_blind_average(event, identity_resolvent(event));
}

double average_mean_time(const ModelParams& event) {
  return label_blind_average(event, mean_time_resolvent(event));
}

GenealogyOutcome simulate_genealogy(const ModelParams& event, Config init,
                                    int j0, RngStream& rng,
                                    const SimOptions& opts) {
  // Rebuilding the generator per replicate would dominate the cost; cache
  // it keyed on the parameter values.
  thread_local std::unique_ptr<BackwardGenerator> cached;
  thread_local ModelParams cached_copy;
  auto same = [](const ModelParams& a, const ModelParams& b) {
    return a.mu1 == b.mu1 && a.mu2 == b.mu2 && a.r == b.r && a.nu == b.nu &&
           a.N == b.N && a.scale == b.scale &&
           a.selection.kind == b.selection.kind &&
           a.selection.s0 == b.selection.s0 && a.selection.p0 == b.selection.p0 &&
           a.selection.breakpoints == b.selection.breakpoints;
  };
  if (!cached || !same(cached_copy, event)) {
    cached = std::make_unique<BackwardGenerator>(event);
    cached_copy = event;
  }
  const BackwardGenerator& gen = *cached;

  if (!gen.feasible(init, j0))
    throw std::invalid_argument("initial backward state is infeasible");

  GenealogyOutcome out;
  out.initial = config_state(init);
  out.p0 = static_cast<double>(j0) / gen.two_n();

  Config cfg = init;
  int j = j0;
  double t = 0.0;
  long migrations = 0;
  for (long ev = 0; ev < opts.max_events; ++ev) {
    double lam = gen.total_rate(cfg, j);
    t += rng.exponential(lam);
    double pick = rng.uniform() * lam;
    const auto& list = gen.transitions(cfg, j);
    const BackwardGenerator::Transition* chosen = &list.back();
    double acc = 0.0;
    for (const auto& tr : list) {
      acc += tr.rate;
      if (pick < acc) {
        chosen = &tr;
        break;
      }
    }
    if (chosen->coalesced) {
      out.coalescence_time = t;
      out.jumps = migrations;
      out.terminal_background = chosen->terminal;
      return out;
    }
    if (chosen->migration) ++migrations;
    cfg = chosen->next_config;
    j = chosen->next_j;
  }
  throw std::runtime_error(
      "genealogy exceeded the event budget (" +
      std::to_string(opts.max_events) + " events) before coalescing");
}

GenealogyOutcome simulate_stationary_genealogy(const ModelParams& event,
                                               RngStream& rng,
                                               const SimOptions& opts) {
  auto psi = stationary_distribution(event);
  const int two_n = 2 * *event.N;
  double u = rng.uniform();
  int j = two_n;
  double acc = 0.0;
  for (int k = 0; k <= two_n; ++k) {
    acc += psi[k];
    if (u < acc) {
      j = k;
      break;
    }
  }
  // Renormalize over the configurations a count of j can actually hold;
  // the excluded ones carry zero weight exactly, so this only guards
  // against last-ulp rounding in the cumulative comparison.
  auto w = pair_weights(two_n, j);
  std::array<bool, 3> ok = {j >= 2, j >= 1 && j <= two_n - 1, j <= two_n - 2};
  double wsum = 0.0;
  for (int c = 0; c < 3; ++c) wsum += ok[c] ? w[c] : 0.0;
  double v = rng.uniform() * wsum;
  Config cfg = Config::qq;
  double acc2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    if (!ok[c]) continue;
    acc2 += w[c];
    cfg = static_cast<Config>(c);
    if (v < acc2) break;
  }
  return simulate_genealogy(event, cfg, j, rng, opts);
}

}  // namespace coalbg::moran
