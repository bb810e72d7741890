#include "tslab/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tslab/rng.hpp"

namespace tslab {

namespace {

double mean_sq_residual(const TrajectoryBatch& batch, const Matrix& A,
                        const LinkFn* link) {
  double acc = 0.0;
  for (std::size_t t = 0; t < batch.length(); ++t) {
    Vector pred = A * batch.xs[t];
    if (link) pred = link->apply(pred);
    acc += (batch.ys[t] - pred).squaredNorm();
  }
  return acc / static_cast<double>(batch.length());
}

Matrix project_frobenius(const Matrix& A, double B, bool* active = nullptr) {
  const double n = A.norm();
  if (n > B) {
    if (active) *active = true;
    if (n == 0.0) return A;
    return (B / n) * A;
  }
  if (active) *active = false;
  return A;
}

// Loss and gradient of the GLM empirical risk at A.
double glm_loss_grad(const TrajectoryBatch& batch, const Matrix& A, const LinkFn& link,
                     Matrix* grad) {
  const double T = static_cast<double>(batch.length());
  if (grad) grad->setZero();
  double acc = 0.0;
  for (std::size_t t = 0; t < batch.length(); ++t) {
    const Vector z = A * batch.xs[t];
    Vector resid(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) resid(i) = link(z(i)) - batch.ys[t](i);
    acc += resid.squaredNorm();
    if (grad) {
      Vector scaled(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) scaled(i) = resid(i) * link.slope(z(i));
      grad->noalias() += 2.0 * scaled * batch.xs[t].transpose();
    }
  }
  if (grad) *grad /= T;
  return acc / T;
}

struct DescentOutcome {
  Matrix A;
  double loss = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;
};

DescentOutcome projected_descent(const TrajectoryBatch& batch, const LinkFn& link,
                                 double B, Matrix A, const OptimizerOpts& opts) {
  DescentOutcome out;
  A = project_frobenius(A, B);
  Matrix grad(A.rows(), A.cols());
  double loss = glm_loss_grad(batch, A, link, &grad);
  double step = opts.init_step;
  int it = 0;
  double gmap_norm = grad.norm();
  for (; it < opts.max_iters; ++it) {
    if (!std::isfinite(loss))
      throw std::runtime_error("erm_glm: non-finite loss at iterate " + std::to_string(it));
    // Backtrack on the projection arc: accept when the Armijo model decrease
    // measured through the gradient mapping holds.
    Matrix A_next;
    double loss_next = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      A_next = project_frobenius(A - step * grad, B);
      const Matrix diff = A - A_next;
      const double decrease = opts.armijo_c / step * diff.squaredNorm();
      loss_next = glm_loss_grad(batch, A_next, link, nullptr);
      if (loss_next <= loss - decrease) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) break;
    gmap_norm = (A - A_next).norm() / step;
    A = std::move(A_next);
    loss = glm_loss_grad(batch, A, link, &grad);
    step = std::min(step / opts.backtrack, opts.init_step);  // mild step recovery
    if (gmap_norm <= opts.grad_tol) {
      ++it;
      break;
    }
  }
  out.A = std::move(A);
  out.loss = loss;
  out.iterations = it;
  out.final_grad_norm = gmap_norm;
  return out;
}

Matrix require_linear(const Member& m, const char* what) {
  if (const auto* lin = std::get_if<LinearMember>(&m)) return lin->A;
  throw std::invalid_argument(std::string(what) +
                              ": expected a linear member; use excess_risk_mc instead");
}

}  // namespace

FitResult lse_linear(const TrajectoryBatch& batch, double B) {
  if (batch.length() == 0) throw std::invalid_argument("lse_linear: empty batch");
  const Eigen::Index dx = batch.xs.front().size();
  const Eigen::Index dy = batch.ys.front().size();
  Matrix S = Matrix::Zero(dx, dx);
  Matrix C = Matrix::Zero(dx, dy);
  for (std::size_t t = 0; t < batch.length(); ++t) {
    S.noalias() += batch.xs[t] * batch.xs[t].transpose();
    C.noalias() += batch.xs[t] * batch.ys[t].transpose();
  }
  Matrix A = (pinv_psd(S) * C).transpose();  // dy x dx
  FitResult fit;
  A = project_frobenius(A, B, &fit.projection_active);
  fit.empirical_risk = mean_sq_residual(batch, A, nullptr);
  fit.parameter = LinearMember{std::move(A)};
  return fit;
}

FitResult erm_glm(const TrajectoryBatch& batch, double B, const LinkFn& link,
                  const OptimizerOpts& opts) {
  if (batch.length() == 0) throw std::invalid_argument("erm_glm: empty batch");
  const Eigen::Index dx = batch.xs.front().size();
  const Eigen::Index dy = batch.ys.front().size();
  if (dx != dy) throw std::invalid_argument("erm_glm: expects square dynamics (dy == dx)");
  FitResult best;
  best.empirical_risk = std::numeric_limits<double>::infinity();
  SplitMix64 g(derive_stream(opts.seed, 0x9d1u));
  int restarts = std::max(opts.restarts, 1);
  for (int r = 0; r < restarts; ++r) {
    Matrix A0;
    if (r == 0) {
      A0 = std::get<LinearMember>(lse_linear(batch, B).parameter).A;
    } else {
      A0 = Matrix(dy, dx);
      for (Eigen::Index i = 0; i < dy; ++i)
        for (Eigen::Index j = 0; j < dx; ++j) A0(i, j) = standard_normal(g);
      const double n = A0.norm();
      if (n > 0.0) A0 *= (B * std::pow(uniform01(g), 1.0 / static_cast<double>(dx * dy))) / n;
    }
    DescentOutcome run = projected_descent(batch, link, B, std::move(A0), opts);
    if (run.loss < best.empirical_risk) {
      best.empirical_risk = run.loss;
      best.trace.iterations = run.iterations;
      best.trace.final_grad_norm = run.final_grad_norm;
      best.trace.restarts_used = r + 1;
      best.projection_active = std::abs(run.A.norm() - B) <= 1e-9 * std::max(1.0, B);
      best.parameter = GlmMember{std::move(run.A)};
    }
  }
  best.trace.restarts_used = restarts;
  return best;
}

FitResult erm_finite(const TrajectoryBatch& batch, const FiniteTable& family) {
  if (batch.length() == 0) throw std::invalid_argument("erm_finite: empty batch");
  if (family.functions.empty()) throw std::invalid_argument("erm_finite: empty family");
  std::vector<int> idx(batch.length());
  for (std::size_t t = 0; t < batch.length(); ++t)
    idx[t] = atom_index(family.atoms, batch.xs[t]);
  int best = 0;
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < family.functions.size(); ++f) {
    double acc = 0.0;
    for (std::size_t t = 0; t < batch.length(); ++t)
      acc += (batch.ys[t] - family.functions[f][static_cast<std::size_t>(idx[t])]).squaredNorm();
    acc /= static_cast<double>(batch.length());
    if (acc < best_risk) {  // strict: ties keep the lowest index
      best_risk = acc;
      best = static_cast<int>(f);
    }
  }
  FitResult fit;
  fit.parameter = TableMember{best};
  fit.empirical_risk = best_risk;
  return fit;
}

double empirical_risk(const HypothesisSpec& family, const Member& member,
                      const TrajectoryBatch& batch) {
  double acc = 0.0;
  for (std::size_t t = 0; t < batch.length(); ++t)
    acc += (batch.ys[t] - eval(family, member, batch.xs[t])).squaredNorm();
  return acc / static_cast<double>(batch.length());
}

RiskEstimate excess_risk_exact(const HypothesisSpec& family, const Member& f_hat,
                               const Member& f_star, const ProcessSpec& process,
                               std::size_t T) {
  if (T == 0) throw std::invalid_argument("excess_risk_exact: T must be >= 1");
  if (const auto* chain = std::get_if<FiniteChainSpec>(&process)) {
    const auto mu = propagated_marginals(*chain, T);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (int k = 0; k < chain->n_states(); ++k) {
        if (mu[t](k) == 0.0) continue;
        const Vector d = eval(family, f_hat, chain->atoms[static_cast<std::size_t>(k)]) -
                         eval(family, f_star, chain->atoms[static_cast<std::size_t>(k)]);
        acc += mu[t](k) * d.squaredNorm();
      }
    return RiskEstimate{acc / static_cast<double>(T), 0.0, RiskMethod::exact_marginal};
  }
  if (const auto* lds = std::get_if<LdsSpec>(&process)) {
    if (lds->trunc_radius)
      throw std::invalid_argument(
          "excess_risk_exact: truncated LDS law has no gramian closed form; use "
          "excess_risk_mc");
    const Matrix delta = require_linear(f_hat, "excess_risk_exact") -
                         require_linear(f_star, "excess_risk_exact");
    const Matrix dtd = delta.transpose() * delta;
    Matrix M = lds->H;
    Matrix G = M * M.transpose();
    double acc = (dtd * G).trace();
    for (std::size_t t = 1; t < T; ++t) {
      M = lds->A_star * M;
      G += M * M.transpose();
      acc += (dtd * G).trace();
    }
    return RiskEstimate{acc / static_cast<double>(T), 0.0, RiskMethod::exact_gramian};
  }
  throw std::invalid_argument(
      "excess_risk_exact: unsupported (process, family) pairing; use excess_risk_mc");
}

RiskEstimate excess_risk_mc(const HypothesisSpec& family, const Member& f_hat,
                            const Member& f_star, const ProcessSpec& process,
                            std::size_t T, int n_eval, std::uint64_t seed) {
  if (n_eval < 2) throw std::invalid_argument("excess_risk_mc: n_eval must be >= 2");
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < n_eval; ++r) {
    const TrajectoryBatch fresh = simulate(process, T, derive_stream(seed, static_cast<std::uint64_t>(r)));
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const Vector d = eval(family, f_hat, fresh.xs[t]) - eval(family, f_star, fresh.xs[t]);
      acc += d.squaredNorm();
    }
    acc /= static_cast<double>(T);
    sum += acc;
    sum_sq += acc * acc;
  }
  const double n = static_cast<double>(n_eval);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return RiskEstimate{mean, std::sqrt(var / n), RiskMethod::monte_carlo};
}

}  // namespace tslab
