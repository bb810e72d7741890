#include "tslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"

namespace tslab {

namespace {

double tv_distance(const Vector& p, const Vector& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

double normal_upper_tail(double x) {  // P(N(0,1) > x)
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

struct MeanVar {
  double mean = 0.0;
  double se = 0.0;
};

MeanVar mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  const double m = s / n;
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v = n > 1 ? v / (n - 1.0) : 0.0;
  return MeanVar{m, std::sqrt(v / n)};
}

// Exact trajectory moments (1/T) sum_t E||f(X_t)||^p for p = 2, 4 of a table
// function against propagated marginals.
void chain_moments(const std::vector<Vector>& mu, const std::vector<Vector>& values,
                   double* m2, double* m4) {
  const double T = static_cast<double>(mu.size());
  double a2 = 0.0, a4 = 0.0;
  for (const auto& m : mu)
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      if (m(k) == 0.0) continue;
      const double nsq = values[static_cast<std::size_t>(k)].squaredNorm();
      a2 += m(k) * nsq;
      a4 += m(k) * nsq * nsq;
    }
  *m2 = a2 / T;
  *m4 = a4 / T;
}

double ratio_or_one(double m4, double m2, double alpha) {
  if (m2 == 0.0 && m4 == 0.0) return 1.0;  // 0/0 convention
  return m4 / std::pow(m2, alpha);
}

// Offset functional (1/T) sum_t [4 <W_t, g(X_t)> - ||g(X_t)||^2] for a
// centered evaluation g.
double offset_value(const TrajectoryBatch& batch,
                    const std::function<Vector(const Vector&)>& g) {
  double acc = 0.0;
  for (std::size_t t = 0; t < batch.length(); ++t) {
    const Vector v = g(batch.xs[t]);
    acc += 4.0 * batch.y_noise(t).dot(v) - v.squaredNorm();
  }
  return acc / static_cast<double>(batch.length());
}

// Projected gradient ascent of the offset functional over {||A||_F <= B} for
// g_A(x) = sigma(A x) - sigma(A_star x).
double offset_ascent(const TrajectoryBatch& batch, double B, const LinkFn& link,
                     const Matrix& A_star, const OptimizerOpts& opts) {
  const Eigen::Index dx = batch.xs.front().size();
  const Eigen::Index dy = batch.ys.front().size();
  const double T = static_cast<double>(batch.length());

  auto value_grad = [&](const Matrix& A, Matrix* grad) {
    if (grad) grad->setZero();
    double acc = 0.0;
    for (std::size_t t = 0; t < batch.length(); ++t) {
      const Vector z = A * batch.xs[t];
      const Vector zs = A_star * batch.xs[t];
      Vector gval(dy);
      for (Eigen::Index i = 0; i < dy; ++i) gval(i) = link(z(i)) - link(zs(i));
      const Vector w = batch.y_noise(t);
      acc += 4.0 * w.dot(gval) - gval.squaredNorm();
      if (grad) {
        Vector scaled(dy);
        for (Eigen::Index i = 0; i < dy; ++i)
          scaled(i) = (4.0 * w(i) - 2.0 * gval(i)) * link.slope(z(i));
        grad->noalias() += scaled * batch.xs[t].transpose();
      }
    }
    if (grad) *grad /= T;
    return acc / T;
  };

  auto project = [&](Matrix A) {
    const double n = A.norm();
    if (n > B && n > 0.0) A *= B / n;
    return A;
  };

  // Restart inits: A_star itself (value 0), the unconstrained linear optimum
  // shifted to A_star, then random ball points.
  std::vector<Matrix> inits;
  inits.push_back(A_star);
  {
    Matrix S = Matrix::Zero(dx, dx);
    Matrix C = Matrix::Zero(dx, dy);
    for (std::size_t t = 0; t < batch.length(); ++t) {
      S.noalias() += batch.xs[t] * batch.xs[t].transpose();
      C.noalias() += batch.xs[t] * batch.y_noise(t).transpose();
    }
    inits.push_back(project(A_star + Matrix(2.0 * (pinv_psd(S) * C).transpose())));
  }
  SplitMix64 rng(derive_stream(opts.seed, 0x0ff5e7u));
  while (static_cast<int>(inits.size()) < std::max(opts.restarts, 2)) {
    Matrix A(dy, dx);
    for (Eigen::Index i = 0; i < dy; ++i)
      for (Eigen::Index j = 0; j < dx; ++j) A(i, j) = standard_normal(rng);
    const double n = A.norm();
    if (n > 0.0) A *= B * std::pow(uniform01(rng), 1.0 / static_cast<double>(dx * dy)) / n;
    inits.push_back(std::move(A));
  }

  double best = 0.0;  // zero function is always feasible under realizability
  for (auto& A0 : inits) {
    Matrix A = project(std::move(A0));
    Matrix grad(dy, dx);
    double val = value_grad(A, &grad);
    double step = opts.init_step;
    for (int it = 0; it < opts.max_iters; ++it) {
      if (!std::isfinite(val)) throw std::runtime_error("offset ascent: non-finite value");
      Matrix A_next;
      double val_next = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        A_next = project(A + step * grad);
        const double increase = opts.armijo_c / step * (A - A_next).squaredNorm();
        val_next = value_grad(A_next, nullptr);
        if (val_next >= val + increase) {
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) break;
      const double gmap = (A - A_next).norm() / step;
      A = std::move(A_next);
      val = value_grad(A, &grad);
      step = std::min(step / opts.backtrack, opts.init_step);
      if (gmap <= opts.grad_tol) break;
    }
    best = std::max(best, val);
  }
  return best;
}

}  // namespace

DependencyMatrix dependency_matrix_finite(const FiniteChainSpec& spec, std::size_t T,
                                          std::size_t cap) {
  if (T == 0) throw std::invalid_argument("dependency_matrix_finite: T must be >= 1");
  if (T > cap)
    throw std::invalid_argument(
        "dependency_matrix_finite: T exceeds the dense storage cap (" +
        std::to_string(cap) + ")");
  const auto mu = propagated_marginals(spec, T);
  DependencyMatrix out;
  out.provenance = DepProvenance::exact_finite_chain;
  out.gamma = Matrix::Identity(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  Matrix Pk = spec.transition;  // P^k
  for (std::size_t k = 1; k < T; ++k) {
    for (std::size_t i = 0; i + k < T; ++i) {
      const std::size_t j = i + k;
      double worst = 0.0;
      for (Eigen::Index s = 0; s < spec.transition.rows(); ++s) {
        if (mu[i](s) == 0.0) continue;  // conditioning state must have mass
        worst = std::max(worst, tv_distance(Pk.row(s).transpose(), mu[j]));
      }
      out.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::sqrt(2.0 * worst);
    }
    if (k + 1 < T) Pk = Pk * spec.transition;
  }
  return out;
}

double dependency_opnorm(const DependencyMatrix& G) { return opnorm(G.gamma); }

double dependency_bound_lds(double tau, double rho, int kappa, double H_opnorm,
                            double mu, double B_xbar, int dx) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  const double arg =
      tau * tau / (4.0 * mu) *
      (B_xbar * B_xbar + static_cast<double>(dx) * H_opnorm * H_opnorm / (1.0 - rho));
  const double logpart = std::max(std::log(arg), 0.0);  // clamp when arg <= 1
  return 5.0 * static_cast<double>(kappa) + 22.0 / (1.0 - rho) * logpart;
}

double dependency_bound_glm(double B, int dx, double B_xbar, double B_x,
                            double sigma_min_H, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(sigma_min_H > 0.0))
    throw std::invalid_argument("sigma_min(H) must be positive (one-step controllability)");
  if (!(B >= 1.0)) throw std::invalid_argument("B must be >= 1");
  const double arg =
      B * std::sqrt(static_cast<double>(dx)) * (B_xbar + B_x) / (2.0 * sigma_min_H);
  const double logpart = std::max(std::log(arg), 0.0);
  return 22.0 / (1.0 - rho) * logpart;
}

double dependency_opnorm_markov_bound(const FiniteChainSpec& spec, std::size_t T) {
  const auto mu = propagated_marginals(spec, T);
  Matrix Pk = spec.transition;
  double acc = 1.0;
  for (std::size_t k = 1; k < T; ++k) {
    double worst = 0.0;
    for (std::size_t t = 0; t + k < T; ++t)
      for (Eigen::Index s = 0; s < spec.transition.rows(); ++s) {
        if (mu[t](s) == 0.0) continue;
        worst = std::max(worst, tv_distance(Pk.row(s).transpose(), mu[t + k]));
      }
    acc += std::sqrt(2.0 * worst);
    if (k + 1 < T) Pk = Pk * spec.transition;
  }
  return acc;
}

double lds_state_bound(double H_opnorm, double tau, double rho, double R) {
  return H_opnorm * tau * R / (1.0 - rho);
}

double glm_state_bound(double P_opnorm, double H_opnorm, double rho, double R) {
  return 2.0 * std::sqrt(P_opnorm) * H_opnorm * R / (1.0 - rho);
}

double glm_fourth_moment_bound(double H_opnorm, double P_opnorm, int dx, double rho) {
  return 12.0 * std::sqrt(2.0) * H_opnorm * std::sqrt(P_opnorm) *
         std::sqrt(static_cast<double>(dx)) / (1.0 - rho);
}

double lds_hyper_constant(double tau, double rho, double H_opnorm, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  return 108.0 * std::pow(tau, 4.0) * std::pow(H_opnorm, 4.0) /
         ((1.0 - rho) * (1.0 - rho) * mu * mu);
}

double glm_hyper_constant(double B_xbar, double sigma_min_H, double zeta) {
  if (!(sigma_min_H > 0.0)) throw std::invalid_argument("sigma_min(H) must be positive");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in (0,1]");
  return 4.0 * std::pow(B_xbar, 4.0) / (std::pow(sigma_min_H, 4.0) * std::pow(zeta, 4.0));
}

HyperEstimate hyper_estimate(const ProcessSpec& process, const FamilySampler& sampler,
                             std::size_t T, int n_mc, int n_funcs, double alpha,
                             std::uint64_t seed, int threads) {
  if (n_mc < 100) throw std::invalid_argument("hyper_estimate: n_mc must be >= 100");
  HyperEstimate est;
  est.n_funcs = n_funcs;
  est.alpha_fit = 0.0;
  // Per-member regressions of log m4 on log m2 across scaled copies; the
  // fitted exponents are averaged over members.
  std::vector<double> member_slopes;
  const double scales[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  auto member_slope = [&scales](double m2, double m4) -> std::optional<double> {
    if (!(m2 > 0.0) || !(m4 > 0.0)) return std::nullopt;
    double mx = 0.0, my = 0.0;
    std::vector<double> xs, ys;
    for (double c : scales) {
      xs.push_back(std::log(c * c * m2));
      ys.push_back(std::log(c * c * c * c * m4));
      mx += xs.back();
      my += ys.back();
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
  };

  if (const auto* chain = std::get_if<FiniteChainSpec>(&process)) {
    est.n_mc = 0;  // exact path
    est.family_descriptor = "finite-chain exact moments, sampled members + state indicators";
    const auto mu = propagated_marginals(*chain, T);
    double best = 0.0;
    for (int f = 0; f < n_funcs; ++f) {
      const VectorFn fn = sampler(f, derive_stream(seed, static_cast<std::uint64_t>(f)));
      std::vector<Vector> values(static_cast<std::size_t>(chain->n_states()));
      for (int k = 0; k < chain->n_states(); ++k)
        values[static_cast<std::size_t>(k)] = fn(chain->atoms[static_cast<std::size_t>(k)]);
      double m2 = 0.0, m4 = 0.0;
      chain_moments(mu, values, &m2, &m4);
      best = std::max(best, ratio_or_one(m4, m2, alpha));
      if (const auto s = member_slope(m2, m4)) member_slopes.push_back(*s);
    }
    // State-indicator scan.
    for (int k = 0; k < chain->n_states(); ++k) {
      double mass = 0.0;
      for (const auto& m : mu) mass += m(k);
      mass /= static_cast<double>(T);
      best = std::max(best, ratio_or_one(mass, mass, alpha));
    }
    est.C_hat = best;
  } else {
    est.n_mc = n_mc;
    est.family_descriptor = "monte-carlo trajectory moments, sampled members";
    double best = 0.0;
    for (int f = 0; f < n_funcs; ++f) {
      const VectorFn fn = sampler(f, derive_stream(seed, static_cast<std::uint64_t>(f)));
      std::vector<double> r2(static_cast<std::size_t>(n_mc)),
          r4(static_cast<std::size_t>(n_mc));
      parallel_for(
          static_cast<std::size_t>(n_mc),
          [&](std::size_t i) {
            const TrajectoryBatch b =
                simulate(process, T, derive_stream(seed, 0x7000000u + i));
            double a2 = 0.0, a4 = 0.0;
            for (const auto& x : b.xs) {
              const double nsq = fn(x).squaredNorm();
              a2 += nsq;
              a4 += nsq * nsq;
            }
            r2[i] = a2 / static_cast<double>(T);
            r4[i] = a4 / static_cast<double>(T);
          },
          threads);
      const double m2 = mean_se(r2).mean, m4 = mean_se(r4).mean;
      best = std::max(best, ratio_or_one(m4, m2, alpha));
      if (const auto s = member_slope(m2, m4)) member_slopes.push_back(*s);
    }
    est.C_hat = best;
  }

  if (!member_slopes.empty()) {
    double acc = 0.0;
    for (double s : member_slopes) acc += s;
    est.alpha_fit = acc / static_cast<double>(member_slopes.size());
  }
  return est;
}

double martingale_complexity_linear(const TrajectoryBatch& batch) {
  if (batch.noise.empty()) throw std::invalid_argument("batch carries no noise record");
  const Eigen::Index dx = batch.xs.front().size();
  const Eigen::Index dy = batch.ys.front().size();
  Matrix S = Matrix::Zero(dx, dx);
  Matrix C = Matrix::Zero(dx, dy);
  for (std::size_t t = 0; t < batch.length(); ++t) {
    S.noalias() += batch.xs[t] * batch.xs[t].transpose();
    C.noalias() += batch.xs[t] * batch.y_noise(t).transpose();
  }
  const Matrix Sp = pinv_psd(S);
  return 4.0 / static_cast<double>(batch.length()) * (C.transpose() * Sp * C).trace();
}

double martingale_complexity_general(const TrajectoryBatch& batch,
                                     const HypothesisSpec& family, const Member& f_star,
                                     const OptimizerOpts& opts) {
  if (const auto* tab = std::get_if<FiniteTable>(&family)) {
    const auto* fs = std::get_if<TableMember>(&f_star);
    if (!fs) throw std::invalid_argument("finite family expects a table f_star");
    const auto& star = tab->functions[static_cast<std::size_t>(fs->index)];
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& fn : tab->functions) {
      double val = offset_value(batch, [&](const Vector& x) -> Vector {
        const int k = atom_index(tab->atoms, x);
        return fn[static_cast<std::size_t>(k)] - star[static_cast<std::size_t>(k)];
      });
      best = std::max(best, val);
    }
    return best;
  }
  if (const auto* lin = std::get_if<LinearBall>(&family)) {
    const auto* fs = std::get_if<LinearMember>(&f_star);
    if (!fs) throw std::invalid_argument("linear family expects a linear f_star");
    return offset_ascent(batch, lin->B, LinkFn::identity(), fs->A, opts);
  }
  if (const auto* glm = std::get_if<GlmBall>(&family)) {
    const auto* fs = std::get_if<GlmMember>(&f_star);
    if (!fs) throw std::invalid_argument("glm family expects a glm f_star");
    return offset_ascent(batch, glm->B, glm->link, fs->A, opts);
  }
  throw std::invalid_argument("martingale_complexity_general: unsupported family");
}

double chaining_bound(const std::function<double(double)>& log_cover, double sigma_w,
                      std::size_t T, int dy, const ChainingOpts& opts) {
  if (!(opts.gamma_max > 0.0)) throw std::invalid_argument("gamma_max must be > 0");
  const double Td = static_cast<double>(T);

  std::function<double(double, double, double, double, double, int)> simpson =
      [&](double a, double b, double fa, double fb, double fm, int depth) -> double {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = std::sqrt(std::max(log_cover(lm), 0.0));
    const double frm = std::sqrt(std::max(log_cover(rm), 0.0));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 1e-10 * (1.0 + std::abs(whole)))
      return left + right;
    return simpson(a, m, fa, fm, flm, depth - 1) + simpson(m, b, fm, fb, frm, depth - 1);
  };
  auto entropy_integral = [&](double lo, double hi) -> double {
    if (hi <= lo) return 0.0;
    const double fa = std::sqrt(std::max(log_cover(lo), 0.0));
    const double fb = std::sqrt(std::max(log_cover(hi), 0.0));
    const double fm = std::sqrt(std::max(log_cover(0.5 * (lo + hi)), 0.0));
    return simpson(lo, hi, fa, fb, fm, 24);
  };

  const int n = std::max(opts.grid, 2);
  const double gmin = opts.gamma_max * opts.gamma_min_factor;
  double best = std::numeric_limits<double>::infinity();
  for (int gi = 0; gi < n; ++gi) {
    const double gamma =
        gmin * std::pow(opts.gamma_max / gmin, static_cast<double>(gi) / (n - 1));
    const double term1 = sigma_w * sigma_w * std::max(log_cover(gamma), 0.0) / Td;
    for (int di = 0; di < n; ++di) {
      const double delta =
          gamma * 1e-9 * std::pow(1e9, static_cast<double>(di) / (n - 1));
      const double term2 = sigma_w * std::sqrt(static_cast<double>(dy)) * delta;
      const double term3 = sigma_w / std::sqrt(Td) * entropy_integral(delta, gamma);
      best = std::min(best, term1 + term2 + term3);
    }
  }
  return best;
}

BoundReport main_bound(double em_t, double r, double B, double log_card, double C,
                       double alpha, double gamma_opnorm, std::size_t T) {
  if (!(alpha >= 1.0 && alpha <= 2.0)) throw std::invalid_argument("alpha must be in [1,2]");
  if (!(r > 0.0 && r <= B)) throw std::invalid_argument("r must lie in (0, B]");
  if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
  BoundReport rep;
  rep.em_t = em_t;
  rep.r = r;
  rep.B = B;
  rep.C = C;
  rep.alpha = alpha;
  rep.gamma_opnorm = gamma_opnorm;
  rep.log_card = log_card;
  rep.T = T;
  rep.log_union = 2.0 * std::log(B) + log_card -
                  static_cast<double>(T) * std::pow(r, 4.0 - 2.0 * alpha) /
                      (8.0 * C * gamma_opnorm * gamma_opnorm);
  rep.union_term = std::exp(rep.log_union);
  rep.total = 8.0 * em_t + r * r + rep.union_term;
  return rep;
}

BurnInResult burn_in_nonparametric(double p, double q, double gamma, double C,
                                   double gamma_dep_sq, double B) {
  if (!(q > 0.0 && q < 2.0)) throw std::invalid_argument("q must lie in (0,2)");
  if (!(gamma > 0.0 && gamma < q / (2.0 + q)))
    throw std::invalid_argument("gamma must lie in (0, q/(2+q))");
  if (!(p > 0.0 && C > 0.0 && gamma_dep_sq >= 1.0 && B >= 1.0))
    throw std::invalid_argument("require p > 0, C > 0, ||Gamma||^2 >= 1, B >= 1");
  const double expn = (q / 2.0) * (2.0 / (2.0 + q) + gamma);
  const double t1 = std::pow(8.0 * (32.0 * p + 1.0) * C * gamma_dep_sq, 1.0 / (1.0 - expn));
  const double t2 =
      std::pow(std::log(B) + 4.0 / q * std::log(8.0 / q), 1.0 / expn);
  BurnInResult res;
  res.value = std::max(t1, t2);
  res.label = "nonparametric burn-in";
  res.terms = {{"t1", t1}, {"t2", t2}};
  return res;
}

BurnInResult burn_in_parametric(double p, double q, double b1, double b2, double gamma,
                                double alpha, double B) {
  if (!(p >= 1.0 && q >= 1.0)) throw std::invalid_argument("require p, q >= 1");
  if (!(b1 >= 0.0 && b1 < 1.0) || !(b2 >= 0.0 && b2 < 2.0))
    throw std::invalid_argument("require b1 in [0,1), b2 in [0,2)");
  if (!(B >= 1.0)) throw std::invalid_argument("require B >= 1");
  const double psi = 1.0 - b1 - (1.0 + gamma) * (4.0 - 2.0 * alpha + b2) / 2.0;
  if (!(psi > 0.0)) throw std::invalid_argument("growth conditions unsatisfiable");
  const double t1a = std::pow(128.0 * p, 1.0 / psi) * std::pow(std::log(8.0), q / psi);
  const double t1b =
      std::pow(128.0 * p, 1.0 / psi) *
      std::pow(4.0 * q / psi * std::log(std::pow(128.0 * p, 1.0 / q) * 8.0 * q / psi),
               q / psi);
  const double t2a = std::pow(512.0 * std::log(B), 1.0 / psi);
  const double t2b = std::pow(1024.0 / psi * std::log(2056.0 / psi), 1.0 / psi);
  BurnInResult res;
  res.value = std::max(std::max(t1a, t1b), std::max(t2a, t2b));
  res.label = "parametric burn-in";
  res.terms = {{"psi", psi}, {"t1a", t1a}, {"t1b", t1b}, {"t2a", t2a}, {"t2b", t2b}};
  return res;
}

BurnInResult burn_in_lds(double tau, double rho, int kappa, double H_opnorm, int dx,
                         double mu) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  const double dxd = static_cast<double>(dx);
  const double kd = static_cast<double>(kappa);
  const double value = std::pow(tau, 4.0) * std::pow(H_opnorm, 4.0) * dxd * dxd /
                       ((1.0 - rho) * (1.0 - rho) * mu * mu) *
                       std::max(kd * kd, 1.0 / ((1.0 - rho) * (1.0 - rho)));
  BurnInResult res;
  res.value = value;
  res.label = "lds burn-in, variable part, up to universal constant (c0 = 1, polylog = 1)";
  return res;
}

BurnInResult burn_in_glm(double P_opnorm, double cond_H, int dx, double zeta, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in (0,1]");
  const double dxd = static_cast<double>(dx);
  const double value = P_opnorm * P_opnorm * std::pow(cond_H, 4.0) * std::pow(dxd, 4.0) /
                       (std::pow(zeta, 4.0) * std::pow(1.0 - rho, 6.0));
  BurnInResult res;
  res.value = value;
  res.label = "glm burn-in, variable part, up to universal constant (c1 = 1, polylog = 1)";
  return res;
}

BurnInResult burn_in_alpha1(double B, double p, double q, double gamma_dep_sq) {
  if (!(q > 0.0 && q < 2.0)) throw std::invalid_argument("q must lie in (0,2)");
  if (!(B > 0.0 && p > 0.0 && gamma_dep_sq > 0.0))
    throw std::invalid_argument("require B, p, ||Gamma||^2 > 0");
  const double second =
      std::pow(16.0 * B * B * p * gamma_dep_sq, 2.0 / q) / std::sqrt(8.0);
  const double exp_rate = 1.0 / (16.0 * B * B * gamma_dep_sq);
  BurnInResult res;
  res.value = second;
  res.label =
      "alpha=1 bound terms: second = value * T^{-2/(2+q)}, third = exp(-T^{q/(2+q)} * exp_rate)";
  res.terms = {{"second_coeff", second}, {"exp_rate", exp_rate}};
  return res;
}

std::vector<SamsonRow> samson_check(const FiniteChainSpec& spec,
                                    const std::vector<double>& g, std::size_t T,
                                    const std::vector<double>& lambdas, int n_mc,
                                    std::uint64_t seed, int threads) {
  if (g.size() != static_cast<std::size_t>(spec.n_states()))
    throw std::invalid_argument("samson_check: g must assign a value to every state");
  for (double v : g)
    if (v < 0.0) throw std::invalid_argument("samson_check: g must be non-negative");
  const auto mu = propagated_marginals(spec, T);
  double sum_eg = 0.0, sum_eg2 = 0.0;
  for (const auto& m : mu)
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      sum_eg += m(k) * g[static_cast<std::size_t>(k)];
      sum_eg2 += m(k) * g[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
    }
  const double gnorm = dependency_opnorm(dependency_matrix_finite(spec, T));

  std::vector<double> sums(static_cast<std::size_t>(n_mc));
  parallel_for(
      static_cast<std::size_t>(n_mc),
      [&](std::size_t i) {
        const auto states = simulate_chain_states(spec, T, derive_stream(seed, i));
        double s = 0.0;
        for (int st : states) s += g[static_cast<std::size_t>(st)];
        sums[i] = s;
      },
      threads);

  std::vector<SamsonRow> rows;
  rows.reserve(lambdas.size());
  std::vector<double> vals(static_cast<std::size_t>(n_mc));
  for (double lam : lambdas) {
    for (std::size_t i = 0; i < sums.size(); ++i) vals[i] = std::exp(-lam * sums[i]);
    const MeanVar mv = mean_se(vals);
    SamsonRow row;
    row.lambda = lam;
    row.lhs = mv.mean;
    row.lhs_se = mv.se;
    row.rhs = std::exp(-lam * sum_eg + lam * lam * gnorm * gnorm * sum_eg2 / 2.0);
    row.violation = row.lhs > row.rhs + 3.0 * row.lhs_se;
    rows.push_back(row);
  }
  return rows;
}

LowerIsometryReport lower_isometry_check(const FiniteChainSpec& spec,
                                         const std::vector<std::vector<Vector>>& net,
                                         double r, double alpha, double C, std::size_t T,
                                         int n_mc, std::uint64_t seed, int threads) {
  if (net.empty()) throw std::invalid_argument("lower_isometry_check: empty net");
  const auto mu = propagated_marginals(spec, T);
  std::vector<double> exact_norm_sq(net.size());
  for (std::size_t f = 0; f < net.size(); ++f) {
    double m2 = 0.0, m4 = 0.0;
    chain_moments(mu, net[f], &m2, &m4);
    exact_norm_sq[f] = m2;
    if (std::abs(std::sqrt(m2) - r) > 1e-9)
      throw std::invalid_argument(
          "lower_isometry_check: net member L2 norm differs from r beyond 1e-9");
  }

  std::vector<unsigned char> hit(static_cast<std::size_t>(n_mc));
  parallel_for(
      static_cast<std::size_t>(n_mc),
      [&](std::size_t i) {
        const auto states = simulate_chain_states(spec, T, derive_stream(seed, i));
        // Event: every net member's empirical norm falls at or below one eighth
        // of its exact mean.
        bool all_below = true;
        for (std::size_t f = 0; f < net.size() && all_below; ++f) {
          double emp = 0.0;
          for (int st : states) emp += net[f][static_cast<std::size_t>(st)].squaredNorm();
          emp /= static_cast<double>(T);
          if (emp - exact_norm_sq[f] / 8.0 > 0.0) all_below = false;
        }
        hit[i] = all_below ? 1 : 0;
      },
      threads);

  double count = 0.0;
  for (auto h : hit) count += h;
  const double n = static_cast<double>(n_mc);
  const double phat = count / n;
  LowerIsometryReport rep;
  rep.empirical_prob = phat;
  rep.se = std::sqrt(std::max(phat * (1.0 - phat), 0.0) / n);
  const double gnorm = dependency_opnorm(dependency_matrix_finite(spec, T));
  rep.bound = static_cast<double>(net.size()) *
              std::exp(-static_cast<double>(T) * std::pow(r, 4.0 - 2.0 * alpha) /
                       (8.0 * C * gnorm * gnorm));
  rep.vacuous = rep.bound > 1.0;
  return rep;
}

TruncatedNoiseReport truncated_noise_diag(int d, double R, int n_mc, std::uint64_t seed,
                                          int threads) {
  if (!(R > 0.0)) throw std::invalid_argument("truncated_noise_diag: R must be > 0");
  if (d < 1 || n_mc < 2) throw std::invalid_argument("truncated_noise_diag: bad sizes");
  TruncatedNoiseReport rep;
  rep.d = d;
  rep.R = R;
  rep.n_mc = n_mc;

  // MGF probe grid: axis directions plus a few fixed random unit vectors.
  std::vector<double> lambdas = {0.25, 0.5, 1.0, 1.5};
  std::vector<Vector> dirs;
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    dirs.push_back(e);
  }
  {
    SplitMix64 g(derive_stream(seed, 0xd12u));
    for (int i = 0; i < 4; ++i) {
      Vector u(d);
      for (int j = 0; j < d; ++j) u(j) = standard_normal(g);
      if (u.norm() > 0.0) dirs.push_back(u / u.norm());
    }
  }
  // Probe PSD matrix M = Q^T Q + small ridge.
  Matrix M;
  {
    SplitMix64 g(derive_stream(seed, 0xd13u));
    Matrix Q(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) Q(i, j) = standard_normal(g);
    M = Q.transpose() * Q / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
  }

  struct Accum {
    Vector mean_sum;
    Matrix cov_sum;
    Matrix cov_sq_sum;
    std::vector<double> mgf_sum, mgf_sq;
    double q_tr = 0.0, q_tr_sq = 0.0, q_full = 0.0, q_full_sq = 0.0;
    double truncated = 0.0;
    long count = 0;
  };
  const std::size_t n_chunks = 256;
  const std::size_t n_probes = lambdas.size() * dirs.size();
  std::vector<Accum> acc(n_chunks);
  for (auto& a : acc) {
    a.mean_sum = Vector::Zero(d);
    a.cov_sum = Matrix::Zero(d, d);
    a.cov_sq_sum = Matrix::Zero(d, d);
    a.mgf_sum.assign(n_probes, 0.0);
    a.mgf_sq.assign(n_probes, 0.0);
  }

  parallel_for(
      n_chunks,
      [&](std::size_t c) {
        SplitMix64 g(derive_stream(seed, c));
        Accum& a = acc[c];
        const long lo = static_cast<long>(c) * n_mc / static_cast<long>(n_chunks);
        const long hi = static_cast<long>(c + 1) * n_mc / static_cast<long>(n_chunks);
        Vector w(d);
        for (long i = lo; i < hi; ++i) {
          for (int j = 0; j < d; ++j) w(j) = standard_normal(g);
          const bool inside = w.norm() <= R;
          const Vector wbar = inside ? w : Vector(Vector::Zero(d));
          if (!inside) a.truncated += 1.0;
          a.mean_sum += wbar;
          for (int r0 = 0; r0 < d; ++r0)
            for (int c0 = 0; c0 < d; ++c0) {
              const double v = wbar(r0) * wbar(c0);
              a.cov_sum(r0, c0) += v;
              a.cov_sq_sum(r0, c0) += v * v;
            }
          std::size_t pi = 0;
          for (double lam : lambdas)
            for (const auto& u : dirs) {
              const double e = std::exp(lam * u.dot(wbar));
              a.mgf_sum[pi] += e;
              a.mgf_sq[pi] += e * e;
              ++pi;
            }
          const double qf = w.dot(M * w);
          const double qt = wbar.dot(M * wbar);
          a.q_full += qf * qf;
          a.q_full_sq += qf * qf * qf * qf;
          a.q_tr += qt * qt;
          a.q_tr_sq += qt * qt * qt * qt;
          ++a.count;
        }
      },
      threads);

  // Sequential reduction keeps results independent of thread count.
  Accum total = acc[0];
  for (std::size_t c = 1; c < n_chunks; ++c) {
    total.mean_sum += acc[c].mean_sum;
    total.cov_sum += acc[c].cov_sum;
    total.cov_sq_sum += acc[c].cov_sq_sum;
    for (std::size_t p = 0; p < n_probes; ++p) {
      total.mgf_sum[p] += acc[c].mgf_sum[p];
      total.mgf_sq[p] += acc[c].mgf_sq[p];
    }
    total.q_tr += acc[c].q_tr;
    total.q_tr_sq += acc[c].q_tr_sq;
    total.q_full += acc[c].q_full;
    total.q_full_sq += acc[c].q_full_sq;
    total.truncated += acc[c].truncated;
    total.count += acc[c].count;
  }
  const double n = static_cast<double>(total.count);

  const Vector mean = total.mean_sum / n;
  rep.mean_max_abs = mean.cwiseAbs().maxCoeff();
  double worst_mean_se = 0.0;
  const Matrix cov = total.cov_sum / n;
  for (int i = 0; i < d; ++i)
    worst_mean_se = std::max(worst_mean_se, std::sqrt(cov(i, i) / n));
  rep.mean_se = worst_mean_se;

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  rep.cov_eig_min = es.eigenvalues().minCoeff();
  rep.cov_eig_max = es.eigenvalues().maxCoeff();
  double worst_entry_se = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double m1 = cov(i, j);
      const double m2 = total.cov_sq_sum(i, j) / n;
      worst_entry_se = std::max(worst_entry_se, std::sqrt(std::max(m2 - m1 * m1, 0.0) / n));
    }
  rep.cov_entry_se = worst_entry_se;

  rep.mgf_max_ratio = -std::numeric_limits<double>::infinity();
  std::size_t pi = 0;
  for (double lam : lambdas)
    for (std::size_t di = 0; di < dirs.size(); ++di, ++pi) {
      const double m1 = total.mgf_sum[pi] / n;
      const double m2 = total.mgf_sq[pi] / n;
      const double se = std::sqrt(std::max(m2 - m1 * m1, 0.0) / n);
      const double bound = std::exp(2.0 * lam * lam);
      const double ratio = m1 / bound;
      if (ratio > rep.mgf_max_ratio) {
        rep.mgf_max_ratio = ratio;
        rep.mgf_ratio_se = se / bound;
      }
    }

  rep.quad_trunc_mean = total.q_tr / n;
  rep.quad_trunc_se =
      std::sqrt(std::max(total.q_tr_sq / n - rep.quad_trunc_mean * rep.quad_trunc_mean, 0.0) / n);
  rep.quad_full_mean = total.q_full / n;
  rep.quad_full_se =
      std::sqrt(std::max(total.q_full_sq / n - rep.quad_full_mean * rep.quad_full_mean, 0.0) / n);
  rep.quad_tr_bound = 3.0 * M.trace() * M.trace();
  rep.trunc_fraction = total.truncated / n;

  rep.second_moment_1d_analytic = std::numeric_limits<double>::quiet_NaN();
  if (d == 1)
    rep.second_moment_1d_analytic =
        1.0 - 2.0 * (R * normal_pdf(R) + normal_upper_tail(R));
  return rep;
}

double chain_l2_norm(const FiniteChainSpec& spec, const std::vector<Vector>& table,
                     std::size_t T) {
  const auto mu = propagated_marginals(spec, T);
  double m2 = 0.0, m4 = 0.0;
  chain_moments(mu, table, &m2, &m4);
  return std::sqrt(m2);
}

StationaryTransferReport stationary_transfer_check(
    const FiniteChainSpec& spec, const std::vector<std::vector<Vector>>& family_sample,
    double r, std::size_t T, double eps_moment) {
  if (family_sample.empty())
    throw std::invalid_argument("stationary_transfer_check: empty family sample");
  if (!(eps_moment > 0.0 && eps_moment <= 2.0))
    throw std::invalid_argument("stationary_transfer_check: eps must lie in (0,2]");
  const Vector& pi = spec.stationary_dist();
  const auto mu = propagated_marginals(spec, T);
  for (const auto& m : mu)
    for (Eigen::Index k = 0; k < m.size(); ++k)
      if (m(k) > 0.0 && pi(k) == 0.0)
        throw std::invalid_argument(
            "stationary_transfer_check: marginal not absolutely continuous w.r.t. pi");

  StationaryTransferReport rep;
  rep.momeq_eps = eps_moment;
  // chi^2(mu_t, pi) and average TV, exactly.
  double tv_sum = 0.0;
  for (const auto& m : mu) {
    double chi = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k)
      if (pi(k) > 0.0) chi += (m(k) - pi(k)) * (m(k) - pi(k)) / pi(k);
    rep.C_chisq = std::max(rep.C_chisq, chi);
    tv_sum += tv_distance(m, pi);
  }
  rep.C_tv = tv_sum / static_cast<double>(T) / (r * r);

  // Normalize members onto the exact L2 sphere of radius r.
  std::vector<std::vector<Vector>> members = family_sample;
  for (auto& f : members) {
    double m2 = 0.0, m4 = 0.0;
    chain_moments(mu, f, &m2, &m4);
    if (m2 <= 0.0)
      throw std::invalid_argument("stationary_transfer_check: member with zero L2 norm");
    const double scale = r / std::sqrt(m2);
    for (auto& v : f) v *= scale;
  }

  double worst_momeq_margin = -std::numeric_limits<double>::infinity();
  for (const auto& f : members) {
    double e2 = 0.0, e4 = 0.0, e8 = 0.0, sup = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      const double nsq = f[static_cast<std::size_t>(k)].squaredNorm();
      e2 += pi(k) * nsq;
      e4 += pi(k) * nsq * nsq;
      e8 += pi(k) * nsq * nsq * nsq * nsq;
      sup = std::max(sup, std::sqrt(nsq));
    }
    (void)e4;
    if (e2 > 0.0) rep.C_8to2 = std::max(rep.C_8to2, e8 / std::pow(e2, 4.0));
    rep.B = std::max(rep.B, sup);

    // Trajectory moments for the direct constant and the moment-equivalence check.
    double m2 = 0.0, m4 = 0.0;
    chain_moments(mu, f, &m2, &m4);
    rep.C_direct = std::max(rep.C_direct, ratio_or_one(m4, m2, 2.0));
    // L^{2+eps} trajectory norm.
    double m2e = 0.0;
    for (const auto& m : mu)
      for (Eigen::Index k = 0; k < m.size(); ++k)
        m2e += m(k) * std::pow(f[static_cast<std::size_t>(k)].norm(), 2.0 + eps_moment);
    m2e /= static_cast<double>(T);
    const double c = std::pow(m2e, 1.0 / (2.0 + eps_moment)) / std::sqrt(m2);
    const double bound = std::pow(sup, 2.0 - eps_moment) * std::pow(c, 2.0 + eps_moment);
    const double ratio = ratio_or_one(m4, m2, 1.0 + eps_moment / 2.0);
    if (ratio - bound > worst_momeq_margin) {
      worst_momeq_margin = ratio - bound;
      rep.momeq_c = c;
      rep.momeq_bound = bound;
      rep.momeq_ratio = ratio;
    }
  }
  rep.momeq_ok = worst_momeq_margin <= 1e-9;
  rep.C_transferred = (1.0 + std::sqrt(rep.C_chisq)) * std::sqrt(rep.C_8to2) *
                      (1.0 + rep.C_tv * rep.B * rep.B) * (1.0 + rep.C_tv * rep.B * rep.B);
  rep.direct_le_transferred = rep.C_direct <= rep.C_transferred + 1e-9;
  return rep;
}

}  // namespace tslab
