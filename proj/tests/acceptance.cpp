// Acceptance suite: one pass/fail line per criterion, each with its pinned
// tolerance and runtime budget. Exit status 0 only when every criterion holds.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tslab/diagnostics.hpp"
#include "tslab/experiments.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"

using namespace tslab;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}

FiniteChainSpec two_state(double p, bool stationary, double noise_std = 0.0) {
  Matrix P(2, 2);
  P << 1.0 - p, p, p, 1.0 - p;
  std::vector<Vector> atoms{vec1(1.0), vec1(-1.0)};
  std::vector<Vector> targets{vec1(1.0), vec1(-1.0)};
  if (stationary) return FiniteChainSpec::make_stationary(P, atoms, targets, noise_std);
  Vector init(2);
  init << 1.0, 0.0;
  return FiniteChainSpec::make(P, atoms, init, targets, noise_std);
}

// Brute-force dependency coefficients over full future blocks and all
// positive-probability conditioning prefixes (no Markov or marginal shortcut).
Matrix brute_force_dependency(const FiniteChainSpec& spec, std::size_t T) {
  const int K = spec.n_states();
  const auto mu = propagated_marginals(spec, T);
  std::vector<Matrix> Pk(T);
  Pk[0] = Matrix::Identity(K, K);
  for (std::size_t k = 1; k < T; ++k) Pk[k] = Pk[k - 1] * spec.transition;

  Matrix gamma = Matrix::Identity(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  for (std::size_t i = 0; i < T; ++i) {
    std::vector<int> prefix_last;
    {
      const Vector& start = spec.init_stationary ? spec.stationary_dist() : spec.init;
      std::function<void(std::size_t, int, double)> rec = [&](std::size_t t, int s,
                                                              double prob) {
        if (prob == 0.0) return;
        if (t == i) {
          prefix_last.push_back(s);
          return;
        }
        for (int n = 0; n < K; ++n) rec(t + 1, n, prob * spec.transition(s, n));
      };
      for (int s = 0; s < K; ++s) rec(0, s, start(s));
    }
    for (std::size_t j = i + 1; j < T; ++j) {
      const std::size_t L = T - j;
      std::vector<std::vector<int>> blocks;
      {
        std::vector<int> cur(L);
        std::function<void(std::size_t)> rec = [&](std::size_t pos) {
          if (pos == L) {
            blocks.push_back(cur);
            return;
          }
          for (int s = 0; s < K; ++s) {
            cur[pos] = s;
            rec(pos + 1);
          }
        };
        rec(0);
      }
      auto block_prob = [&](const std::vector<int>& b, const Vector& head) {
        double p = head(b[0]);
        for (std::size_t t = 0; t + 1 < L; ++t) p *= spec.transition(b[t], b[t + 1]);
        return p;
      };
      double worst = 0.0;
      for (int last : prefix_last) {
        const Vector head = Pk[j - i].row(last).transpose();
        double tv = 0.0;
        for (const auto& b : blocks)
          tv += std::abs(block_prob(b, head) - block_prob(b, mu[j]));
        worst = std::max(worst, 0.5 * tv);
      }
      gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::sqrt(2.0 * worst);
    }
  }
  return gamma;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
};

// ---------------------------------------------------------------------------
// 1. Dependency-matrix exactness.
Outcome criterion1() {
  Outcome out;
  std::vector<std::pair<FiniteChainSpec, std::size_t>> corpus;
  corpus.push_back({two_state(0.25, true), 16});
  corpus.push_back({two_state(0.5, true), 12});
  corpus.push_back({two_state(0.1, false), 12});
  {
    Matrix P(3, 3);
    P << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.3, 0.3, 0.4;
    Vector init(3);
    init << 0.2, 0.5, 0.3;
    corpus.push_back({FiniteChainSpec::make(P, {vec1(0), vec1(1), vec1(2)}, init,
                                            {vec1(0), vec1(0), vec1(0)}, 0.0),
                      8});
  }
  {
    Matrix P(3, 3);  // near-cycle with leakage
    P << 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.8, 0.1, 0.1;
    corpus.push_back({FiniteChainSpec::make_stationary(P, {vec1(0), vec1(1), vec1(2)},
                                                       {vec1(0), vec1(0), vec1(0)}, 0.0),
                      8});
  }
  {
    Matrix P(4, 4);
    P << 0.4, 0.3, 0.2, 0.1, 0.1, 0.4, 0.3, 0.2, 0.2, 0.1, 0.4, 0.3, 0.3, 0.2, 0.1, 0.4;
    Vector init(4);
    init << 0.25, 0.25, 0.25, 0.25;
    corpus.push_back({FiniteChainSpec::make(P, {vec1(0), vec1(1), vec1(2), vec1(3)}, init,
                                            {vec1(0), vec1(0), vec1(0), vec1(0)}, 0.0),
                      6});
  }
  double worst = 0.0;
  for (const auto& [spec, T] : corpus) {
    const Matrix brute = brute_force_dependency(spec, T);
    const Matrix fast = dependency_matrix_finite(spec, T).gamma;
    worst = std::max(worst, (brute - fast).cwiseAbs().maxCoeff());
  }
  out.require(worst <= 1e-12, "brute-force agreement, worst=" + std::to_string(worst));

  const DependencyMatrix G = dependency_matrix_finite(two_state(0.25, true), 16);
  double worst_law = 0.0;
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index j = i + 1; j < 16; ++j)
      worst_law = std::max(
          worst_law,
          std::abs(G.gamma(i, j) - std::pow(0.5, static_cast<double>(j - i) / 2.0)));
  out.require(worst_law <= 1e-12, "0.5^{k/2} law");
  out.detail << " corpus=" << corpus.size() << " worst_dev=" << worst
             << " law_dev=" << worst_law;
  return out;
}

// ---------------------------------------------------------------------------
// 2. Hypercontractivity tightness.
Outcome criterion2() {
  Outcome out;
  struct ChainCase {
    FiniteChainSpec spec;
    std::size_t T;
  };
  Vector soft_init(2);
  soft_init << 0.9, 0.1;
  Matrix P25(2, 2);
  P25 << 0.75, 0.25, 0.25, 0.75;
  std::vector<ChainCase> cases;
  cases.push_back({two_state(0.5, true), 32});
  cases.push_back({two_state(0.25, true), 32});
  cases.push_back({FiniteChainSpec::make(P25, {vec1(1.0), vec1(-1.0)}, soft_init,
                                         {vec1(1.0), vec1(-1.0)}, 0.0),
                   32});
  for (const auto& c : cases) {
    const auto mu = propagated_marginals(c.spec, c.T);
    double mu_min = 1.0;
    for (const auto& m : mu)
      for (Eigen::Index k = 0; k < m.size(); ++k) mu_min = std::min(mu_min, m(k));
    out.require(mu_min > 0.0, "full support");
    FamilySampler sampler = [&](int, std::uint64_t seed) -> VectorFn {
      SplitMix64 g(seed);
      const double v0 = 2.0 * uniform01(g) - 1.0, v1 = 2.0 * uniform01(g) - 1.0;
      return [v0, v1](const Vector& x) { return vec1(x(0) > 0 ? v0 : v1); };
    };
    const HyperEstimate est =
        hyper_estimate(ProcessSpec{c.spec}, sampler, c.T, 100, 1000, 2.0, 1234);
    out.require(est.C_hat <= 1.0 / mu_min + 1e-9,
                "C <= 1/mu_min, got " + std::to_string(est.C_hat));
  }
  // Equality attained by an indicator on the uniform two-state chain.
  FamilySampler zero = [](int, std::uint64_t) -> VectorFn {
    return [](const Vector&) { return vec1(0.0); };
  };
  const HyperEstimate tight =
      hyper_estimate(ProcessSpec{two_state(0.5, true)}, zero, 32, 100, 1, 2.0, 1);
  out.require(std::abs(tight.C_hat - 2.0) <= 1e-9, "indicator attains 1/mu_min");
  out.detail << " chains=" << cases.size() << " uniform_C=" << tight.C_hat;
  return out;
}

// ---------------------------------------------------------------------------
// 3. Samson exponential inequality.
Outcome criterion3() {
  Outcome out;
  const std::size_t T = 64;
  const int n_mc = 100000;
  std::vector<double> lambdas;
  for (int i = 0; i < 10; ++i) lambdas.push_back(0.02 * std::pow(10.0, i / 4.5));
  int rows_checked = 0;
  for (double p : {0.5, 0.25, 0.05}) {
    const auto rows = samson_check(two_state(p, true), {1.0, 0.0}, T, lambdas, n_mc,
                                   derive_stream(777, static_cast<std::uint64_t>(p * 100)));
    for (const auto& r : rows) {
      ++rows_checked;
      out.require(!r.violation, "p=" + std::to_string(p) +
                                    " lambda=" + std::to_string(r.lambda));
    }
  }
  out.detail << " rows=" << rows_checked << " (3 chains x 10 lambdas)";
  return out;
}

// ---------------------------------------------------------------------------
// 4. Lower isometry.
Outcome criterion4() {
  Outcome out;
  const int n_mc = 10000;
  int vacuous_seen = 0;
  struct Scenario {
    double p;
    std::size_t T;
  };
  for (const Scenario& sc : {Scenario{0.5, 200}, Scenario{0.25, 400}, Scenario{0.05, 400}}) {
    FiniteChainSpec chain = two_state(sc.p, true);
    const std::vector<std::vector<Vector>> net = {{vec1(1.0), vec1(0.0)},
                                                  {vec1(0.0), vec1(1.0)}};
    const double r = std::sqrt(0.5);
    const auto rep = lower_isometry_check(chain, net, r, 2.0, 2.0, sc.T, n_mc,
                                          derive_stream(4040, sc.T));
    if (rep.vacuous) {
      ++vacuous_seen;
      out.require(rep.bound > 1.0, "vacuous flag consistent");
    } else {
      out.require(rep.empirical_prob <= rep.bound + 3.0 * rep.se,
                  "p=" + std::to_string(sc.p));
    }
    out.detail << " [p=" << sc.p << " emp=" << rep.empirical_prob << " bound=" << rep.bound
               << (rep.vacuous ? " vacuous" : "") << "]";
  }
  out.require(vacuous_seen >= 1, "at least one vacuous-bound scenario flagged");
  return out;
}

// ---------------------------------------------------------------------------
// 5. Truncated noise.
Outcome criterion5() {
  Outcome out;
  const int n_mc = 1000000;
  for (int d : {1, 4}) {
    const double R = truncation_radius(d, 256, 4.0);  // beta = 4 default
    const auto rep = truncated_noise_diag(d, R, n_mc, derive_stream(55, d));
    out.require(rep.mean_max_abs <= 3.0 * rep.mean_se, "mean, d=" + std::to_string(d));
    out.require(rep.cov_eig_min >= 0.5 - 3.0 * rep.cov_entry_se,
                "cov lower, d=" + std::to_string(d));
    out.require(rep.cov_eig_max <= 1.0 + 3.0 * rep.cov_entry_se,
                "cov upper, d=" + std::to_string(d));
    out.require(rep.mgf_max_ratio <= 1.0 + 3.0 * rep.mgf_ratio_se,
                "mgf, d=" + std::to_string(d));
    out.require(rep.quad_trunc_mean <= rep.quad_full_mean + 3.0 * rep.quad_trunc_se,
                "quad comparison, d=" + std::to_string(d));
    out.require(rep.quad_full_mean <= rep.quad_tr_bound + 3.0 * rep.quad_full_se,
                "3(tr M)^2, d=" + std::to_string(d));
  }
  const auto r3 = truncated_noise_diag(1, 3.0, n_mc, derive_stream(55, 99));
  out.require(std::abs(r3.second_moment_1d_analytic - 0.97067) <= 1e-3,
              "d=1 R=3 second moment " + std::to_string(r3.second_moment_1d_analytic));
  out.require(std::abs(r3.cov_eig_max - r3.second_moment_1d_analytic) <=
                  4.0 * r3.cov_entry_se,
              "MC second moment matches the gaussian integral");
  out.detail << " d=1 R=3 moment=" << r3.second_moment_1d_analytic;
  return out;
}

// ---------------------------------------------------------------------------
// 6. LDS rate.
Outcome criterion6() {
  Outcome out;
  std::vector<std::size_t> grid;
  for (int e = 8; e <= 14; ++e) grid.push_back(std::size_t{1} << e);

  auto run_case = [&](const Matrix& A, const Matrix& H, std::uint64_t seed,
                      const std::string& name) {
    SweepConfig cfg;
    cfg.process.kind = ProcessTemplate::Kind::lds;
    cfg.process.binding = ProcessTemplate::Binding::none;
    cfg.process.A_base = A;
    cfg.process.H = H;
    cfg.family.kind = FamilyConfig::Kind::linear_ball;
    cfg.family.B = 2.0;
    cfg.T_grid = grid;
    cfg.param_grid = {0.0};
    cfg.n_rep = 100;
    cfg.master_seed = seed;
    cfg.record_m_t = false;
    const ExperimentResult res = risk_curve(cfg);
    std::vector<double> lt, lr;
    double t_risk_top = 0.0;
    for (const auto& agg : res.aggregates) {
      lt.push_back(std::log(static_cast<double>(agg.T)));
      lr.push_back(std::log(agg.mean_risk));
      if (agg.T == grid.back()) t_risk_top = static_cast<double>(agg.T) * agg.mean_risk;
    }
    const double slope = ls_slope(lt, lr);
    const double dx = static_cast<double>(A.rows());
    const double target = opnorm(H) * opnorm(H) * dx * dx;
    out.require(std::abs(slope - (-1.0)) <= 0.15,
                name + " slope " + std::to_string(slope));
    out.require(t_risk_top >= target / 3.0 && t_risk_top <= target * 3.0,
                name + " T*risk " + std::to_string(t_risk_top) + " vs " +
                    std::to_string(target));
    out.detail << " [" << name << ": slope=" << slope << " Trisk=" << t_risk_top
               << " target=" << target << "]";
  };

  Matrix A1(1, 1);
  A1 << 0.5;
  run_case(A1, Matrix::Identity(1, 1), 611, "scalar");
  Matrix A2(2, 2);
  A2 << 0.6, 0.2, 0.0, 0.5;
  run_case(A2, Matrix::Identity(2, 2), 622, "2-dim");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Little-mixing invariance.
Outcome criterion7() {
  Outcome out;
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::lds;
  cfg.process.binding = ProcessTemplate::Binding::a_scalar;
  cfg.process.H = Matrix::Identity(1, 1);
  cfg.family.kind = FamilyConfig::Kind::linear_ball;
  cfg.family.B = 2.0;
  for (int e = 6; e <= 15; ++e) cfg.T_grid.push_back(std::size_t{1} << e);
  cfg.param_grid = {0.0, 0.5, 0.9, 0.99};
  cfg.n_rep = 2000;
  cfg.master_seed = 2718;
  cfg.record_m_t = false;
  const MixingSweepResult ms = mixing_sweep(cfg);
  out.require(ms.invariance_statistic <= 2.0,
              "invariance statistic " + std::to_string(ms.invariance_statistic));
  const auto det = burn_in_detect(ms.result, 0.25);
  std::map<double, std::size_t> t_star;
  for (const auto& d : det)
    t_star[d.param] = d.T_star ? *d.T_star : (std::size_t{1} << 62);
  out.require(t_star.at(0.99) >= t_star.at(0.5), "burn-in monotone in mixing");
  // Small-T burn-in effect for the slowest chain: T * risk at 2^6 visibly above
  // the large-T extrapolation.
  double early = 0.0, late = 0.0;
  for (const auto& agg : ms.result.aggregates) {
    if (agg.param != 0.99) continue;
    if (agg.T == cfg.T_grid.front()) early = static_cast<double>(agg.T) * agg.mean_risk;
    if (agg.T == cfg.T_grid.back()) late = static_cast<double>(agg.T) * agg.mean_risk;
  }
  out.require(early / late > 1.5, "burn-in effect ratio " + std::to_string(early / late));
  out.detail << " stat=" << ms.invariance_statistic << " T*(0.5)=" << t_star.at(0.5)
             << " T*(0.99)=" << t_star.at(0.99) << " early/late=" << early / late;
  return out;
}

// ---------------------------------------------------------------------------
// 8. GLM pipeline.
Outcome criterion8() {
  Outcome out;
  std::vector<std::size_t> grid;
  for (int e = 8; e <= 14; ++e) grid.push_back(std::size_t{1} << e);

  auto run_case = [&](const Matrix& A, double rho, std::uint64_t seed,
                      const std::string& name) {
    SweepConfig cfg;
    cfg.process.kind = ProcessTemplate::Kind::glm;
    cfg.process.binding = ProcessTemplate::Binding::none;
    cfg.process.A_base = A;
    cfg.process.H = Matrix::Identity(A.rows(), A.cols());
    cfg.process.link = LinkFn::leaky_relu(0.5);
    cfg.process.P_star_diag = Vector::Ones(A.rows());
    cfg.process.rho = rho;
    cfg.family.kind = FamilyConfig::Kind::glm_ball;
    cfg.family.B = 2.0;
    cfg.T_grid = grid;
    cfg.param_grid = {0.0};
    cfg.n_rep = 100;
    cfg.n_eval = 200;
    cfg.master_seed = seed;
    cfg.record_m_t = false;
    const ExperimentResult res = parameter_recovery_curve(cfg);

    int dominance_fails = 0, conversion_fails_unflagged = 0;
    for (const auto& row : res.rows) {
      const bool dom = row.notes.find("erm_dominance_fail") != std::string::npos;
      const bool conv = row.notes.find("conversion_fail") != std::string::npos;
      dominance_fails += dom;
      if (!dom && conv) ++conversion_fails_unflagged;
    }
    const double fail_rate =
        static_cast<double>(dominance_fails) / static_cast<double>(res.rows.size());
    out.require(fail_rate <= 0.01, name + " dominance fail rate " +
                                       std::to_string(fail_rate));
    out.require(conversion_fails_unflagged == 0,
                name + " conversion failures on non-flagged replicates");

    std::vector<double> lt, lr;
    for (const auto& agg : res.aggregates) {
      lt.push_back(std::log(static_cast<double>(agg.T)));
      lr.push_back(std::log(agg.mean_risk));
    }
    const double slope = ls_slope(lt, lr);
    out.require(std::abs(slope - (-1.0)) <= 0.2, name + " slope " + std::to_string(slope));
    out.detail << " [" << name << ": slope=" << slope << " dom_fails=" << dominance_fails
               << "/" << res.rows.size() << "]";
  };

  Matrix A1(1, 1);
  A1 << 0.5;
  run_case(A1, 0.3, 811, "d=1");
  Matrix A2(2, 2);
  A2 << 0.4, 0.2, 0.0, 0.3;
  run_case(A2, 0.25, 822, "d=2");
  return out;
}

// ---------------------------------------------------------------------------
// 9. Bound vs actual.
Outcome criterion9() {
  Outcome out;
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::finite_chain;
  cfg.process.chain = two_state(0.25, true, 0.25);
  cfg.family.kind = FamilyConfig::Kind::finite_table;
  cfg.family.table.atoms = cfg.process.chain.atoms;
  cfg.family.table.functions = {{vec1(1.0), vec1(-1.0)},
                                {vec1(0.6), vec1(-1.2)},
                                {vec1(1.3), vec1(-0.7)},
                                {vec1(0.8), vec1(-0.8)}};
  cfg.family.truth_index = 0;
  for (int e = 4; e <= 10; ++e) cfg.T_grid.push_back(std::size_t{1} << e);
  cfg.param_grid = {0.0};
  cfg.n_rep = 300;
  cfg.master_seed = 909;
  const auto rows = bound_vs_actual(cfg);
  int violations = 0;
  for (const auto& row : rows) {
    if (!row.ok) ++violations;
    out.detail << " [T=" << row.T << " actual=" << row.actual << " rhs=" << row.rhs << "]";
  }
  out.require(violations == 0, std::to_string(violations) + " violations");
  return out;
}

// ---------------------------------------------------------------------------
// 10. Formula evaluators against independently scripted displays.
Outcome criterion10() {
  Outcome out;
  SplitMix64 g(10101);
  auto rel_ok = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };

  for (int draw = 0; draw < 20; ++draw) {
    // Nonparametric burn-in.
    {
      const double q = 0.3 + 1.5 * uniform01(g);
      const double gamma = 0.9 * uniform01(g) * q / (2.0 + q) + 1e-6;
      const double p = 0.5 + 4.0 * uniform01(g);
      const double C = 0.5 + 3.0 * uniform01(g);
      const double gsq = 1.0 + 5.0 * uniform01(g);
      const double B = 1.0 + 3.0 * uniform01(g);
      const double expn = (q / 2.0) * (2.0 / (2.0 + q) + gamma);
      const double script = std::max(
          std::pow(8.0 * (32.0 * p + 1.0) * C * gsq, 1.0 / (1.0 - expn)),
          std::pow(std::log(B) + (4.0 / q) * std::log(8.0 / q), 1.0 / expn));
      out.require(rel_ok(burn_in_nonparametric(p, q, gamma, C, gsq, B).value, script),
                  "nonparametric burn-in draw " + std::to_string(draw));
    }
    // Parametric burn-in.
    {
      const double alpha = 1.5 + 0.5 * uniform01(g);
      const double b1 = 0.2 * uniform01(g);
      const double b2 = 0.2 * uniform01(g);
      const double gamma = 0.05 + 0.1 * uniform01(g);
      const double p = 1.0 + 3.0 * uniform01(g);
      const double q = 1.0 + uniform01(g);
      const double B = 1.0 + 4.0 * uniform01(g);
      const double psi = 1.0 - b1 - (1.0 + gamma) * (4.0 - 2.0 * alpha + b2) / 2.0;
      if (psi > 0.05) {
        const double t1 = std::max(
            std::pow(128.0 * p, 1.0 / psi) * std::pow(std::log(8.0), q / psi),
            std::pow(128.0 * p, 1.0 / psi) *
                std::pow((4.0 * q / psi) *
                             std::log(std::pow(128.0 * p, 1.0 / q) * 8.0 * q / psi),
                         q / psi));
        const double t2 = std::max(std::pow(512.0 * std::log(B), 1.0 / psi),
                                   std::pow((1024.0 / psi) * std::log(2056.0 / psi),
                                            1.0 / psi));
        out.require(
            rel_ok(burn_in_parametric(p, q, b1, b2, gamma, alpha, B).value,
                   std::max(t1, t2)),
            "parametric burn-in draw " + std::to_string(draw));
      }
    }
    // LDS / GLM burn-in variable parts (constants fixed to one).
    {
      const double tau = 1.0 + 3.0 * uniform01(g);
      const double rho = 0.2 + 0.7 * uniform01(g);
      const int kappa = 1 + static_cast<int>(3.0 * uniform01(g));
      const double Hn = 0.5 + 2.0 * uniform01(g);
      const int dx = 1 + static_cast<int>(3.0 * uniform01(g));
      const double mu = 0.1 + uniform01(g);
      const double script = tau * tau * tau * tau * Hn * Hn * Hn * Hn * dx * dx /
                            ((1.0 - rho) * (1.0 - rho) * mu * mu) *
                            std::max(static_cast<double>(kappa) * kappa,
                                     1.0 / ((1.0 - rho) * (1.0 - rho)));
      out.require(rel_ok(burn_in_lds(tau, rho, kappa, Hn, dx, mu).value, script),
                  "lds burn-in draw " + std::to_string(draw));

      const double Pn = 1.0 + 2.0 * uniform01(g);
      const double condH = 1.0 + 2.0 * uniform01(g);
      const double zeta = 0.2 + 0.8 * uniform01(g);
      const double script_glm = Pn * Pn * condH * condH * condH * condH *
                                std::pow(static_cast<double>(dx), 4.0) /
                                (zeta * zeta * zeta * zeta * std::pow(1.0 - rho, 6.0));
      out.require(rel_ok(burn_in_glm(Pn, condH, dx, zeta, rho).value, script_glm),
                  "glm burn-in draw " + std::to_string(draw));
    }
    // alpha = 1 coefficients.
    {
      const double B = 1.0 + 2.0 * uniform01(g);
      const double p = 0.5 + 2.0 * uniform01(g);
      const double q = 0.3 + 1.5 * uniform01(g);
      const double gsq = 1.0 + 3.0 * uniform01(g);
      const BurnInResult r = burn_in_alpha1(B, p, q, gsq);
      const double second =
          std::pow(16.0 * B * B * p * gsq, 2.0 / q) / (2.0 * std::sqrt(2.0));
      const double rate = 1.0 / (16.0 * B * B * gsq);
      out.require(rel_ok(r.terms.at("second_coeff"), second) &&
                      rel_ok(r.terms.at("exp_rate"), rate),
                  "alpha1 draw " + std::to_string(draw));
    }
    // Main bound.
    {
      const double em = uniform01(g);
      const double B = 1.0 + 2.0 * uniform01(g);
      const double r = B * (0.2 + 0.8 * uniform01(g));
      const double log_card = 5.0 * uniform01(g);
      const double C = 0.5 + 2.0 * uniform01(g);
      const double alpha = 1.0 + uniform01(g);
      const double gn = 1.0 + 2.0 * uniform01(g);
      const std::size_t T = 16 + static_cast<std::size_t>(1000.0 * uniform01(g));
      const double script =
          8.0 * em + r * r +
          B * B * std::exp(log_card) *
              std::exp(-static_cast<double>(T) * std::pow(r, 4.0 - 2.0 * alpha) /
                       (8.0 * C * gn * gn));
      out.require(rel_ok(main_bound(em, r, B, log_card, C, alpha, gn, T).total, script),
                  "main bound draw " + std::to_string(draw));
    }
    // Chaining bound against a closed-form entropy integral on the same grid.
    {
      const double p = 0.5 + 2.0 * uniform01(g);
      const double q = 0.6 + 0.9 * uniform01(g);  // integrable sqrt-entropy
      const double sw = 0.5 + uniform01(g);
      const int dy = 1 + static_cast<int>(2.0 * uniform01(g));
      const std::size_t T = 256 + static_cast<std::size_t>(4000.0 * uniform01(g));
      const auto cover = [&](double eps) { return p * std::pow(eps, -q); };
      ChainingOpts opts;
      opts.gamma_max = 1.0;
      const double lib = chaining_bound(cover, sw, T, dy, opts);
      // Independent script: same grid, entropy integral in closed form.
      double script = 1e300;
      const int n = opts.grid;
      const double gmin = opts.gamma_max * opts.gamma_min_factor;
      for (int gi = 0; gi < n; ++gi) {
        const double gamma =
            gmin * std::pow(opts.gamma_max / gmin, static_cast<double>(gi) / (n - 1));
        const double term1 = sw * sw * cover(gamma) / static_cast<double>(T);
        for (int di = 0; di < n; ++di) {
          const double delta =
              gamma * 1e-9 * std::pow(1e9, static_cast<double>(di) / (n - 1));
          const double term2 = sw * std::sqrt(static_cast<double>(dy)) * delta;
          const double a = 1.0 - q / 2.0;
          const double integral =
              std::sqrt(p) * (std::pow(gamma, a) - std::pow(delta, a)) / a;
          const double term3 =
              sw / std::sqrt(static_cast<double>(T)) * integral;
          script = std::min(script, term1 + term2 + term3);
        }
      }
      out.require(std::abs(lib - script) <= 1e-7 * std::max(1.0, std::abs(script)),
                  "chaining draw " + std::to_string(draw));
    }
    // Ellipsoid evaluators.
    {
      const double beta = 0.5 + 1.5 * uniform01(g);
      const double B = 0.5 + 2.0 * uniform01(g);
      const double q = 0.2 + 1.3 * uniform01(g);
      const double eps = 0.05 + 2.0 * uniform01(g);
      int m_script = 0;
      const double rhs = std::abs(std::log(4.0 * B / (beta * eps))) / beta;
      for (int m = 1; m < 1000000; ++m)
        if (m - (q / beta) * std::log(m) >= rhs) {
          m_script = m;
          break;
        }
      const int m_lib = ellipsoid_m_eps(beta, B, q, eps);
      out.require(m_lib == m_script, "m_eps draw " + std::to_string(draw));

      const double K = 1.0 + 2.0 * uniform01(g);
      const double c_script =
          1.0 + 7.0 * std::pow(K, 3.0) * std::pow(B, 4.0) *
                    std::pow(static_cast<double>(m_lib), 4.0 * q + 2.0);
      out.require(rel_ok(ellipsoid_hyper_constant(m_lib, K, B, q), c_script),
                  "C_eps draw " + std::to_string(draw));

      const double log_script =
          m_lib * std::log(1.0 + 8.0 * B * std::pow(m_lib, q) / eps);
      Ellipsoid ell = make_ellipsoid(beta, B, q, {}, cosine_basis());
      const CoverCertificate cert = ellipsoid_cover_truncated(ell, eps, m_lib, 1);
      out.require(rel_ok(cert.log_cardinality, log_script),
                  "ellipsoid log-cardinality draw " + std::to_string(draw));
    }
  }
  out.detail << " 20 draws x {burn_in x5, main_bound, chaining, ellipsoid x3}";
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_s;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "dependency-matrix exactness", 10.0, criterion1},
      {2, "hypercontractivity tightness", 30.0, criterion2},
      {3, "samson exponential inequality", 120.0, criterion3},
      {4, "lower isometry", 120.0, criterion4},
      {5, "truncated noise", 120.0, criterion5},
      {6, "lds rate", 600.0, criterion6},
      {7, "little-mixing invariance", 900.0, criterion7},
      {8, "glm pipeline", 1200.0, criterion8},
      {9, "bound vs actual", 300.0, criterion9},
      {10, "formula evaluators", 10.0, criterion10},
  };
  bool all_pass = true;
  for (const auto& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail << " exception: " << ex.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (secs > e.budget_s) {
      out.pass = false;
      out.detail << " RUNTIME OVER BUDGET";
    }
    all_pass &= out.pass;
    std::printf("%s criterion %d: %s (%.1f s / %.0f s budget)%s\n",
                out.pass ? "PASS" : "FAIL", e.id, e.name, secs, e.budget_s,
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%s\n", all_pass ? "ACCEPTANCE: ALL CRITERIA PASS"
                               : "ACCEPTANCE: FAILURES PRESENT");
  return all_pass ? 0 : 1;
}
