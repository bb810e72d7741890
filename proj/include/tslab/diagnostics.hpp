#ifndef TSLAB_DIAGNOSTICS_HPP
#define TSLAB_DIAGNOSTICS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tslab/estimators.hpp"
#include "tslab/hypotheses.hpp"
#include "tslab/processes.hpp"

namespace tslab {

enum class DepProvenance { exact_finite_chain, bound_lds, bound_glm };

// Upper-triangular matrix of sqrt-total-variation dependence coefficients:
// unit diagonal, zero below, Gamma_ij in [0, sqrt(2)] above.
struct DependencyMatrix {
  Matrix gamma;
  DepProvenance provenance = DepProvenance::exact_finite_chain;
  int size() const { return static_cast<int>(gamma.rows()); }
};

// Exact coefficients for a finite chain: Gamma_ij^2 = 2 max over positive-mass
// conditioning states s of TV(row s of P^{j-i}, mu_j).
DependencyMatrix dependency_matrix_finite(const FiniteChainSpec& spec, std::size_t T,
                                          std::size_t cap = 2048);

double dependency_opnorm(const DependencyMatrix& G);

// Analytic upper bound for the truncated LDS:
// 5 kappa + 22/(1-rho) * log((tau^2/(4 mu)) [B_xbar^2 + dx ||H||^2/(1-rho)]),
// log clamped at 0.
double dependency_bound_lds(double tau, double rho, int kappa, double H_opnorm,
                            double mu, double B_xbar, int dx);

// Analytic upper bound for the truncated GLM:
// 22/(1-rho) * log(B sqrt(dx) (B_xbar + B_x) / (2 sigma_min(H))), clamped at 0.
double dependency_bound_glm(double B, int dx, double B_xbar, double B_x,
                            double sigma_min_H, double rho);

// Triangular Toeplitz bound for a Markov chain:
// 1 + sqrt(2) sum_k max_t sup_s sqrt(TV(P^k(s, .), mu_{t+k})); always dominates
// the exact operator norm.
double dependency_opnorm_markov_bound(const FiniteChainSpec& spec, std::size_t T);

// Almost-sure state bounds of the truncated processes.
double lds_state_bound(double H_opnorm, double tau, double rho, double R);     // B_xbar
double glm_state_bound(double P_opnorm, double H_opnorm, double rho, double R);  // B_xbar (P-norm)
double glm_fourth_moment_bound(double H_opnorm, double P_opnorm, int dx, double rho);  // B_x

// Analytic trajectory hypercontractivity constants at alpha = 2 for the
// truncated parametric processes.
double lds_hyper_constant(double tau, double rho, double H_opnorm, double mu);  // C_LDS
double glm_hyper_constant(double B_xbar, double sigma_min_H, double zeta);      // C_GLM

struct HyperEstimate {
  double C_hat = 0.0;
  double alpha_fit = 0.0;
  int n_mc = 0;
  int n_funcs = 0;
  std::string family_descriptor;
};

using VectorFn = std::function<Vector(const Vector&)>;
// Sampler of family members; index runs over 0..n_funcs-1.
using FamilySampler = std::function<VectorFn(int index, std::uint64_t seed)>;

// Ratio of the trajectory fourth moment to the alpha power of the trajectory
// second moment, maximized over sampled members. Finite chains use exact
// marginal moments (no MC) and additionally scan all state indicators; the
// 0/0 ratio counts as 1. alpha_fit regresses log m4 on log m2 across scaled
// copies of the sampled members.
HyperEstimate hyper_estimate(const ProcessSpec& process, const FamilySampler& sampler,
                             std::size_t T, int n_mc, int n_funcs, double alpha,
                             std::uint64_t seed, int threads = 0);

// Closed-form unconstrained supremum (4/T) || (sum X X^T)^{+/2} sum X W^T ||_F^2.
double martingale_complexity_linear(const TrajectoryBatch& batch);

// Family-constrained supremum of the offset functional over F - {f_star}:
// exhaustive for finite tables, projected gradient ascent for linear/GLM balls.
double martingale_complexity_general(const TrajectoryBatch& batch,
                                     const HypothesisSpec& family, const Member& f_star,
                                     const OptimizerOpts& opts = {});

struct ChainingOpts {
  double gamma_max = 1.0;
  double gamma_min_factor = 1e-6;
  int grid = 64;
};

// Numeric infimum of sigma_w^2 logN(gamma)/T + sigma_w sqrt(dy) delta
// + sigma_w/sqrt(T) * int_delta^gamma sqrt(logN(s)) ds over a log-spaced
// (gamma, delta) grid; Simpson quadrature on the entropy integral.
double chaining_bound(const std::function<double(double)>& log_cover, double sigma_w,
                      std::size_t T, int dy, const ChainingOpts& opts = {});

struct BoundReport {
  double em_t = 0.0;
  double r = 0.0;
  double union_term = 0.0;
  double total = 0.0;
  double log_union = 0.0;
  // echoed inputs
  double B = 0.0, C = 0.0, alpha = 0.0, gamma_opnorm = 0.0, log_card = 0.0;
  std::size_t T = 0;
};

// 8 em_t + r^2 + B^2 |F_r| exp(-T r^(4-2alpha) / (8 C ||Gamma||^2)), the union
// term evaluated in log space.
BoundReport main_bound(double em_t, double r, double B, double log_card, double C,
                       double alpha, double gamma_opnorm, std::size_t T);

struct BurnInResult {
  double value = 0.0;
  std::string label;
  std::map<std::string, double> terms;
};

BurnInResult burn_in_nonparametric(double p, double q, double gamma, double C,
                                   double gamma_dep_sq, double B);
BurnInResult burn_in_parametric(double p, double q, double b1, double b2, double gamma,
                                double alpha, double B);
BurnInResult burn_in_lds(double tau, double rho, int kappa, double H_opnorm, int dx,
                         double mu);
BurnInResult burn_in_glm(double P_opnorm, double cond_H, int dx, double zeta, double rho);
// Term coefficients of the alpha = 1 risk bound: value = coefficient of
// T^{-2/(2+q)}; terms carry the exponential-term rate 1/(16 B^2 ||Gamma||^2).
BurnInResult burn_in_alpha1(double B, double p, double q, double gamma_dep_sq);

struct SamsonRow {
  double lambda = 0.0;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  bool violation = false;  // lhs > rhs + 3 se
};

// Empirical E exp(-lambda sum g(X_t)) against the exponential-inequality RHS
// built from exact chain moments and the exact dependency matrix.
std::vector<SamsonRow> samson_check(const FiniteChainSpec& spec,
                                    const std::vector<double>& g, std::size_t T,
                                    const std::vector<double>& lambdas, int n_mc,
                                    std::uint64_t seed, int threads = 0);

struct LowerIsometryReport {
  double empirical_prob = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool vacuous = false;  // bound > 1
};

// Frequency of the lower-isometry failure event over a finite net of centered
// table functions with exact L2 norm r, against |net| exp(-T r^(4-2alpha)/(8C||Gamma||^2)).
LowerIsometryReport lower_isometry_check(const FiniteChainSpec& spec,
                                         const std::vector<std::vector<Vector>>& net,
                                         double r, double alpha, double C, std::size_t T,
                                         int n_mc, std::uint64_t seed, int threads = 0);

struct TruncatedNoiseReport {
  int d = 0;
  double R = 0.0;
  int n_mc = 0;
  double mean_max_abs = 0.0;
  double mean_se = 0.0;
  double cov_eig_min = 0.0;
  double cov_eig_max = 0.0;
  double cov_entry_se = 0.0;
  double mgf_max_ratio = 0.0;
  double mgf_ratio_se = 0.0;
  double quad_trunc_mean = 0.0;
  double quad_trunc_se = 0.0;
  double quad_full_mean = 0.0;
  double quad_full_se = 0.0;
  double quad_tr_bound = 0.0;  // 3 (tr M)^2 for the probe M
  double trunc_fraction = 0.0;
  double second_moment_1d_analytic = 0.0;  // NaN unless d == 1
};

// Truncated standard Gaussian diagnostics: mean, covariance eigenvalue range,
// sub-Gaussian MGF probe E exp(lambda <u, Wbar>)/exp(2 lambda^2), and
// quadratic-form comparisons for a random PSD matrix.
TruncatedNoiseReport truncated_noise_diag(int d, double R, int n_mc, std::uint64_t seed,
                                          int threads = 0);

struct StationaryTransferReport {
  double C_chisq = 0.0;
  double C_tv = 0.0;
  double C_8to2 = 0.0;
  double B = 0.0;
  double C_transferred = 0.0;
  double C_direct = 0.0;
  bool direct_le_transferred = false;
  // moment-equivalence fallback at alpha = 1 + eps/2
  double momeq_eps = 0.0;
  double momeq_c = 0.0;
  double momeq_bound = 0.0;
  double momeq_ratio = 0.0;
  bool momeq_ok = false;
};

// Stationary-transfer constants for a finite chain, all computed exactly: the
// family sample is scaled onto the exact L2 sphere of radius r first.
StationaryTransferReport stationary_transfer_check(
    const FiniteChainSpec& spec, const std::vector<std::vector<Vector>>& family_sample,
    double r, std::size_t T, double eps_moment = 1.0);

// Exact trajectory L2 norm (sqrt of (1/T) sum_t E||f(X_t)||^2) of a table function.
double chain_l2_norm(const FiniteChainSpec& spec, const std::vector<Vector>& table,
                     std::size_t T);

}  // namespace tslab

#endif  // TSLAB_DIAGNOSTICS_HPP
