#include "tslab/processes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tslab/rng.hpp"

namespace tslab {

namespace {

void check_probability_vector(const Vector& p, double tol, const char* what) {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) < 0.0)
      throw std::invalid_argument(std::string(what) + " has a negative entry");
  if (std::abs(p.sum() - 1.0) > tol)
    throw std::invalid_argument(std::string(what) + " does not sum to 1");
}

void check_row_stochastic(const Matrix& P) {
  if (P.rows() != P.cols() || P.rows() == 0)
    throw std::invalid_argument("transition matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      if (P(i, j) < 0.0) throw std::invalid_argument("transition matrix has a negative entry");
    if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("transition row " + std::to_string(i) + " does not sum to 1");
  }
}

void check_chain_shapes(const FiniteChainSpec& s) {
  const auto K = static_cast<std::size_t>(s.transition.rows());
  if (s.atoms.size() != K) throw std::invalid_argument("atoms count must match state count");
  if (s.target_fn.size() != K) throw std::invalid_argument("target_fn count must match state count");
  for (const auto& a : s.atoms)
    if (a.size() != s.atoms.front().size()) throw std::invalid_argument("atom dimensions differ");
  for (const auto& y : s.target_fn)
    if (y.size() != s.target_fn.front().size())
      throw std::invalid_argument("target_fn dimensions differ");
  if (s.noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
}

int sample_index(const Vector& p, double u) {
  double acc = 0.0;
  const Eigen::Index n = p.size();
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    acc += p(k);
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(n - 1);
}

Vector draw_gaussian(SplitMix64& g, Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = standard_normal(g);
  return v;
}

// Shared LDS/GLM driver: identical draw order, so identity-link GLM output is
// bitwise equal to the LDS output for the same seed. Work buffers are reused
// across steps; replicate loops are allocation-sensitive.
template <class Dynamics>
TrajectoryBatch simulate_dynamics(Eigen::Index dx, Eigen::Index dv, const Matrix& H,
                                  const std::optional<double>& radius, Dynamics&& f,
                                  std::size_t T, std::uint64_t seed) {
  TrajectoryBatch batch;
  batch.seed = seed;
  batch.noise_map = H;
  batch.xs.reserve(T);
  batch.ys.reserve(T);
  batch.noise.reserve(T);
  SplitMix64 g(seed);

  Vector v(dv), hv(dx), fx(dx), x(dx);
  auto draw = [&]() {
    for (Eigen::Index i = 0; i < dv; ++i) v(i) = standard_normal(g);
    if (radius && v.norm() > *radius) {
      v.setZero();
      batch.truncated_flag = true;
    }
  };

  draw();
  x.noalias() = H * v;
  for (std::size_t t = 0; t < T; ++t) {
    draw();
    f(x, fx);
    hv.noalias() = H * v;
    batch.xs.push_back(x);
    batch.ys.push_back(fx + hv);
    batch.noise.push_back(v);
    x = batch.ys.back();
  }
  return batch;
}

}  // namespace

LinkFn LinkFn::identity() { return LinkFn{Tag::identity, 1.0}; }

LinkFn LinkFn::leaky_relu(double zeta) {
  if (!(zeta > 0.0 && zeta <= 1.0))
    throw std::invalid_argument("leaky_relu zeta must lie in (0, 1]");
  return LinkFn{Tag::leaky_relu, zeta};
}

FiniteChainSpec FiniteChainSpec::make(Matrix transition, std::vector<Vector> atoms,
                                      Vector init, std::vector<Vector> target_fn,
                                      double noise_std) {
  check_row_stochastic(transition);
  FiniteChainSpec s;
  s.transition = std::move(transition);
  s.atoms = std::move(atoms);
  s.init = std::move(init);
  s.target_fn = std::move(target_fn);
  s.noise_std = noise_std;
  check_chain_shapes(s);
  if (s.init.size() != s.transition.rows())
    throw std::invalid_argument("init length must match state count");
  check_probability_vector(s.init, 1e-12, "init");
  try {
    s.stationary = stationary_distribution(s.transition);
  } catch (const std::exception&) {
    // no unique pi; only an error if someone asks for it
  }
  return s;
}

FiniteChainSpec FiniteChainSpec::make_stationary(Matrix transition, std::vector<Vector> atoms,
                                                 std::vector<Vector> target_fn,
                                                 double noise_std) {
  check_row_stochastic(transition);
  Vector pi = stationary_distribution(transition);  // throws on reducible chains
  FiniteChainSpec s = make(std::move(transition), std::move(atoms), pi,
                           std::move(target_fn), noise_std);
  s.init_stationary = true;
  return s;
}

const Vector& FiniteChainSpec::stationary_dist() const {
  if (stationary.size() == 0)
    throw std::invalid_argument("chain has no unique stationary distribution");
  return stationary;
}

LdsSpec LdsSpec::make(Matrix A_star, Matrix H, std::optional<double> trunc_radius) {
  if (A_star.rows() != A_star.cols()) throw std::invalid_argument("A_star must be square");
  if (H.rows() != A_star.rows()) throw std::invalid_argument("H row count must equal dx");
  const double sr = spectral_radius(A_star);
  if (!(sr < 1.0))
    throw std::invalid_argument("A_star must be stable (spectral radius " +
                                std::to_string(sr) + " >= 1)");
  if (trunc_radius && !(*trunc_radius > 0.0))
    throw std::invalid_argument("trunc_radius must be > 0");
  return LdsSpec{std::move(A_star), std::move(H), trunc_radius};
}

GlmSpec GlmSpec::make(Matrix A_star, Matrix H, LinkFn link, Vector P_star_diag,
                      double rho, std::optional<double> trunc_radius) {
  if (A_star.rows() != A_star.cols()) throw std::invalid_argument("A_star must be square");
  if (H.rows() != A_star.rows() || H.cols() != A_star.cols())
    throw std::invalid_argument("H must be square with the same dimension as A_star");
  if (P_star_diag.size() != A_star.rows())
    throw std::invalid_argument("P_star diagonal length must equal dx");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  for (Eigen::Index i = 0; i < P_star_diag.size(); ++i)
    if (P_star_diag(i) < 1.0 - 1e-12)
      throw std::invalid_argument("P_star must satisfy P_star >= I");
  // Lyapunov stability: A^T P A <= rho P within eigenvalue tolerance 1e-10.
  Matrix P = P_star_diag.asDiagonal();
  Matrix slack = rho * P - A_star.transpose() * P * A_star;
  if (lambda_min_sym(0.5 * (slack + slack.transpose())) < -1e-10)
    throw std::invalid_argument("(P_star, rho) is not a Lyapunov certificate for A_star");
  const double smin = Eigen::JacobiSVD<Matrix>(H).singularValues().minCoeff();
  if (!(smin > 0.0)) throw std::invalid_argument("H must be full rank (sigma_min(H) > 0)");
  // Link regularity on a probe grid: 1-Lipschitz, zeta-expansive, sigma(0) = 0.
  if (link(0.0) != 0.0) throw std::invalid_argument("link must satisfy sigma(0) = 0");
  SplitMix64 g(0x11ce5fu);
  for (int i = 0; i < 1000; ++i) {
    const double x = 20.0 * (uniform01(g) - 0.5), y = 20.0 * (uniform01(g) - 0.5);
    const double d = std::abs(link(x) - link(y)), e = std::abs(x - y);
    if (d > e + 1e-12 || d < link.zeta * e - 1e-12)
      throw std::invalid_argument("link violates Lipschitz/expansiveness bounds on probe grid");
  }
  return GlmSpec{std::move(A_star), std::move(H), link, std::move(P_star_diag),
                 rho, trunc_radius};
}

TrajectoryBatch simulate_finite_chain(const FiniteChainSpec& spec, std::size_t T,
                                      std::uint64_t seed) {
  if (T == 0) throw std::invalid_argument("T must be >= 1");
  TrajectoryBatch batch;
  batch.seed = seed;
  batch.xs.reserve(T);
  batch.ys.reserve(T);
  batch.noise.reserve(T);
  SplitMix64 g(seed);
  const Vector& start = spec.init_stationary ? spec.stationary_dist() : spec.init;
  int s = sample_index(start, uniform01(g));
  for (std::size_t t = 0; t < T; ++t) {
    Vector w = spec.noise_std > 0.0
                   ? Vector(spec.noise_std * draw_gaussian(g, spec.dy()))
                   : Vector(Vector::Zero(spec.dy()));
    batch.xs.push_back(spec.atoms[s]);
    batch.ys.push_back(spec.target_fn[s] + w);
    batch.noise.push_back(std::move(w));
    if (t + 1 < T) s = sample_index(spec.transition.row(s), uniform01(g));
  }
  return batch;
}

std::vector<int> simulate_chain_states(const FiniteChainSpec& spec, std::size_t T,
                                       std::uint64_t seed) {
  if (T == 0) throw std::invalid_argument("T must be >= 1");
  std::vector<int> states;
  states.reserve(T);
  SplitMix64 g(seed);
  const Vector& start = spec.init_stationary ? spec.stationary_dist() : spec.init;
  int s = sample_index(start, uniform01(g));
  for (std::size_t t = 0; t < T; ++t) {
    states.push_back(s);
    if (t + 1 < T) s = sample_index(spec.transition.row(s), uniform01(g));
  }
  return states;
}

TrajectoryBatch simulate_lds(const LdsSpec& spec, std::size_t T, std::uint64_t seed) {
  if (T == 0) throw std::invalid_argument("T must be >= 1");
  const Matrix& A = spec.A_star;
  return simulate_dynamics(
      spec.dx(), spec.dv(), spec.H, spec.trunc_radius,
      [&A](const Vector& x, Vector& out) { out.noalias() = A * x; }, T, seed);
}

TrajectoryBatch simulate_glm(const GlmSpec& spec, std::size_t T, std::uint64_t seed) {
  if (T == 0) throw std::invalid_argument("T must be >= 1");
  const Matrix& A = spec.A_star;
  const LinkFn link = spec.link;
  return simulate_dynamics(
      spec.dx(), spec.dx(), spec.H, spec.trunc_radius,
      [&A, link](const Vector& x, Vector& out) {
        out.noalias() = A * x;
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = link(out(i));
      },
      T, seed);
}

TrajectoryBatch simulate(const ProcessSpec& spec, std::size_t T, std::uint64_t seed) {
  return std::visit(
      [&](const auto& s) -> TrajectoryBatch {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FiniteChainSpec>)
          return simulate_finite_chain(s, T, seed);
        else if constexpr (std::is_same_v<S, LdsSpec>)
          return simulate_lds(s, T, seed);
        else
          return simulate_glm(s, T, seed);
      },
      spec);
}

Matrix controllability_gramian(const Matrix& A, const Matrix& H, int t) {
  if (A.rows() != A.cols() || H.rows() != A.rows())
    throw std::invalid_argument("controllability_gramian: dimension mismatch");
  if (t < 0) throw std::invalid_argument("controllability_gramian: t must be >= 0");
  Matrix M = H;  // A^k H
  Matrix G = M * M.transpose();
  for (int k = 1; k <= t; ++k) {
    M = A * M;
    G += M * M.transpose();
  }
  return G;
}

Matrix average_gramian(const Matrix& A, const Matrix& H, std::size_t T) {
  Matrix M = H;
  Matrix G = M * M.transpose();
  Matrix acc = G;  // sum of Gamma_t
  for (std::size_t t = 1; t < T; ++t) {
    M = A * M;
    G += M * M.transpose();
    acc += G;
  }
  return acc / static_cast<double>(T);
}

double stability_certificate(const Matrix& A, double rho, std::size_t k_cap) {
  const double sr = spectral_radius(A);
  if (!(rho > sr)) throw std::invalid_argument("rho must exceed the spectral radius");
  if (!(rho < 1.0)) throw std::invalid_argument("rho must lie in (spectral radius, 1)");
  double tau = 1.0;  // k = 0 term
  Matrix Ak = Matrix::Identity(A.rows(), A.cols());
  double rho_k = 1.0;
  std::vector<double> ratios{1.0};
  std::size_t k_max = 64;
  for (;;) {
    while (ratios.size() <= k_max) {
      Ak = A * Ak;
      rho_k *= rho;
      const double ratio = opnorm(Ak) / rho_k;
      ratios.push_back(ratio);
      tau = std::max(tau, ratio);
    }
    // Submultiplicativity: once every ratio in (k_max/2, k_max] is <= 1, any
    // k > k_max decomposes into window pieces and a remainder <= k_max, so no
    // later ratio can exceed the scanned maximum.
    bool settled = true;
    for (std::size_t k = k_max / 2 + 1; k <= k_max; ++k)
      if (ratios[k] > 1.0) {
        settled = false;
        break;
      }
    if (settled) return tau;
    if (k_max >= k_cap)
      throw std::runtime_error("stability_certificate: scan cap reached without settling");
    k_max = std::min(k_max * 2, k_cap);
  }
}

std::vector<Vector> propagated_marginals(const FiniteChainSpec& spec, std::size_t T) {
  if (T == 0) throw std::invalid_argument("T must be >= 1");
  std::vector<Vector> mu;
  mu.reserve(T);
  Vector m = spec.init_stationary ? spec.stationary_dist() : spec.init;
  mu.push_back(m);
  for (std::size_t t = 1; t < T; ++t) {
    m = spec.transition.transpose() * m;
    mu.push_back(m);
  }
  return mu;
}

Vector stationary_distribution(const Matrix& transition) {
  check_row_stochastic(transition);
  const Eigen::Index K = transition.rows();
  Eigen::EigenSolver<Matrix> es(transition.transpose());
  int n_unit = 0;
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < 1e-9) {
      ++n_unit;
      best = i;
    }
  }
  if (n_unit != 1)
    throw std::invalid_argument("chain has no unique stationary distribution");
  Vector pi = es.eigenvectors().col(best).real();
  if (pi.sum() < 0.0) pi = -pi;
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  // Polish with power iteration to the 1e-12 contract.
  for (int it = 0; it < 20000; ++it) {
    Vector next = transition.transpose() * pi;
    next /= next.sum();
    const double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (delta < 1e-15) break;
  }
  if ((transition.transpose() * pi - pi).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("stationary distribution did not converge to tolerance");
  return pi;
}

double truncation_radius(int dx, std::size_t T, double beta) {
  return std::sqrt(static_cast<double>(dx)) +
         std::sqrt(2.0 * (1.0 + beta) * std::log(static_cast<double>(T)));
}

int process_dx(const ProcessSpec& spec) {
  return std::visit([](const auto& s) { return s.dx(); }, spec);
}

int process_dy(const ProcessSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FiniteChainSpec>)
          return s.dy();
        else
          return s.dx();  // Y_t = X_{t+1}
      },
      spec);
}

}  // namespace tslab
