#ifndef TSLAB_ESTIMATORS_HPP
#define TSLAB_ESTIMATORS_HPP

#include <cstdint>

#include "tslab/hypotheses.hpp"
#include "tslab/processes.hpp"

namespace tslab {

struct OptimizerOpts {
  int restarts = 5;
  int max_iters = 10000;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double init_step = 1.0;
  std::uint64_t seed = 0;
};

struct OptTrace {
  int iterations = 0;
  double final_grad_norm = 0.0;
  int restarts_used = 0;
};

struct FitResult {
  Member parameter;
  double empirical_risk = 0.0;
  OptTrace trace;
  bool projection_active = false;
};

enum class RiskMethod { exact_gramian, exact_marginal, monte_carlo };

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  RiskMethod method = RiskMethod::monte_carlo;
};

// Least squares over {||A||_F <= B} via normal equations and pseudo-inverse
// (singular values below 1e-10 sigma_max zeroed); radial projection when the
// unconstrained solution leaves the ball.
FitResult lse_linear(const TrajectoryBatch& batch, double B);

// Projected gradient descent on the empirical square loss of x -> sigma(Ax)
// over the Frobenius ball; Armijo backtracking; restart 0 starts at the
// projected linear LSE solution, the rest start at random ball points.
FitResult erm_glm(const TrajectoryBatch& batch, double B, const LinkFn& link,
                  const OptimizerOpts& opts = {});

// Exhaustive empirical risk over a finite table; ties break to the lowest index.
FitResult erm_finite(const TrajectoryBatch& batch, const FiniteTable& family);

double empirical_risk(const HypothesisSpec& family, const Member& member,
                      const TrajectoryBatch& batch);

// (1/T) sum_t E||f_hat(X~_t) - f_star(X~_t)||^2 in closed form: finite chains
// via propagated marginals (any evaluable family), untruncated LDS via exact
// gramians (linear members only). Unsupported pairings throw with a pointer
// to excess_risk_mc.
RiskEstimate excess_risk_exact(const HypothesisSpec& family, const Member& f_hat,
                               const Member& f_star, const ProcessSpec& process,
                               std::size_t T);

// Fresh-trajectory Monte Carlo estimate with standard error.
RiskEstimate excess_risk_mc(const HypothesisSpec& family, const Member& f_hat,
                            const Member& f_star, const ProcessSpec& process,
                            std::size_t T, int n_eval, std::uint64_t seed);

}  // namespace tslab

#endif  // TSLAB_ESTIMATORS_HPP
