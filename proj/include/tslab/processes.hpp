#ifndef TSLAB_PROCESSES_HPP
#define TSLAB_PROCESSES_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "tslab/linalg.hpp"

namespace tslab {

// Scalar link applied coordinatewise by the GLM dynamics: 1-Lipschitz,
// zeta-expansive, sigma(0) = 0.
struct LinkFn {
  enum class Tag { identity, leaky_relu };
  Tag tag = Tag::identity;
  double zeta = 1.0;

  static LinkFn identity();
  static LinkFn leaky_relu(double zeta);

  double operator()(double x) const {
    if (tag == Tag::identity) return x;
    return x >= 0.0 ? x : zeta * x;
  }
  // Derivative almost everywhere (right derivative at 0).
  double slope(double x) const {
    if (tag == Tag::identity) return 1.0;
    return x >= 0.0 ? 1.0 : zeta;
  }
  Vector apply(const Vector& x) const {
    if (tag == Tag::identity) return x;
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = (*this)(x(i));
    return out;
  }
};

// Finite-state Markov chain emitting atom states with optional Gaussian
// target noise: X_t = atoms[s_t], Y_t = target_fn[s_t] + W_t.
struct FiniteChainSpec {
  Matrix transition;              // K x K, row-stochastic
  std::vector<Vector> atoms;      // K state vectors in R^dx
  Vector init;                    // distribution of s_0 (resolved to pi when stationary)
  bool init_stationary = false;
  std::vector<Vector> target_fn;  // K target vectors in R^dy
  double noise_std = 0.0;
  Vector stationary;              // pi when the chain has a unique one, else empty

  static FiniteChainSpec make(Matrix transition, std::vector<Vector> atoms,
                              Vector init, std::vector<Vector> target_fn,
                              double noise_std);
  // init = "stationary"
  static FiniteChainSpec make_stationary(Matrix transition, std::vector<Vector> atoms,
                                         std::vector<Vector> target_fn, double noise_std);

  int n_states() const { return static_cast<int>(transition.rows()); }
  int dx() const { return static_cast<int>(atoms.front().size()); }
  int dy() const { return static_cast<int>(target_fn.front().size()); }
  // pi; throws if the chain has no unique stationary distribution.
  const Vector& stationary_dist() const;
};

// X_{t+1} = A_star X_t + H V_t with X_0 = H V_init, Y_t = X_{t+1}.
// trunc_radius R replaces every draw by V 1{||V||_2 <= R}.
struct LdsSpec {
  Matrix A_star;
  Matrix H;
  std::optional<double> trunc_radius;

  static LdsSpec make(Matrix A_star, Matrix H, std::optional<double> trunc_radius = {});
  int dx() const { return static_cast<int>(A_star.rows()); }
  int dv() const { return static_cast<int>(H.cols()); }
};

// X_{t+1} = sigma(A_star X_t) + H V_t; Lyapunov pair (P_star, rho) supplied
// and validated, never searched for.
struct GlmSpec {
  Matrix A_star;
  Matrix H;
  LinkFn link;
  Vector P_star_diag;  // diagonal of P_star, entries >= 1
  double rho = 0.5;
  std::optional<double> trunc_radius;

  static GlmSpec make(Matrix A_star, Matrix H, LinkFn link, Vector P_star_diag,
                      double rho, std::optional<double> trunc_radius = {});
  int dx() const { return static_cast<int>(A_star.rows()); }
};

using ProcessSpec = std::variant<FiniteChainSpec, LdsSpec, GlmSpec>;

// One realized trajectory {(X_t, Y_t)} with its noise record. For dynamics
// processes noise[t] stores the effective (possibly truncated) draw V_t and
// noise_map = H, so ys[t] - f_star(xs[t]) = noise_map * noise[t] exactly; for
// finite chains noise[t] is already the target noise W_t (noise_map empty).
struct TrajectoryBatch {
  std::vector<Vector> xs;
  std::vector<Vector> ys;
  std::vector<Vector> noise;
  Matrix noise_map;  // empty = identity
  std::uint64_t seed = 0;
  bool truncated_flag = false;

  std::size_t length() const { return xs.size(); }
  // Noise in Y space: W_t.
  Vector y_noise(std::size_t t) const {
    return noise_map.size() == 0 ? noise[t] : Vector(noise_map * noise[t]);
  }
};

TrajectoryBatch simulate_finite_chain(const FiniteChainSpec& spec, std::size_t T,
                                      std::uint64_t seed);
TrajectoryBatch simulate_lds(const LdsSpec& spec, std::size_t T, std::uint64_t seed);
TrajectoryBatch simulate_glm(const GlmSpec& spec, std::size_t T, std::uint64_t seed);
TrajectoryBatch simulate(const ProcessSpec& spec, std::size_t T, std::uint64_t seed);

// State indices only; cheap path for chain diagnostics that ignore targets.
std::vector<int> simulate_chain_states(const FiniteChainSpec& spec, std::size_t T,
                                       std::uint64_t seed);

// Gamma_t = sum_{k=0}^{t} A^k H H^T (A^k)^T; equals cov(X_t) for the LDS.
Matrix controllability_gramian(const Matrix& A, const Matrix& H, int t);

// Average covariance (1/T) sum_{t<T} Gamma_t.
Matrix average_gramian(const Matrix& A, const Matrix& H, std::size_t T);

// Smallest tau with ||A^k|| <= tau rho^k over a power scan whose maximum has
// provably passed (every ratio in the top dyadic window <= 1, so submultiplicativity
// rules out any later maximum). Throws if rho <= spectral radius, rho >= 1, or the
// scan exceeds the hard cap.
double stability_certificate(const Matrix& A, double rho, std::size_t k_cap = 10000);

// mu_t for t = 0..T-1 via mu_{t+1} = mu_t P.
std::vector<Vector> propagated_marginals(const FiniteChainSpec& spec, std::size_t T);

// Unique stationary distribution of a row-stochastic matrix (eigen-solve with
// power-iteration fallback, tolerance 1e-12). Throws when not unique.
Vector stationary_distribution(const Matrix& transition);

// R = sqrt(dx) + sqrt(2 (1+beta) log T), the default truncation radius.
double truncation_radius(int dx, std::size_t T, double beta = 4.0);

int process_dx(const ProcessSpec& spec);
int process_dy(const ProcessSpec& spec);

}  // namespace tslab

#endif  // TSLAB_PROCESSES_HPP
