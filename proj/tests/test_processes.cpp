#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tslab/processes.hpp"
#include "tslab/rng.hpp"

using namespace tslab;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}

FiniteChainSpec two_state_chain(double p, bool stationary, double noise_std = 0.0) {
  Matrix P(2, 2);
  P << 1.0 - p, p, p, 1.0 - p;
  std::vector<Vector> atoms{vec1(1.0), vec1(-1.0)};
  std::vector<Vector> targets{vec1(0.5), vec1(-0.5)};
  if (stationary) return FiniteChainSpec::make_stationary(P, atoms, targets, noise_std);
  Vector init(2);
  init << 1.0, 0.0;
  return FiniteChainSpec::make(P, atoms, init, targets, noise_std);
}

}  // namespace

TEST_CASE("degenerate single-state chain") {
  Matrix P(1, 1);
  P << 1.0;
  FiniteChainSpec spec = FiniteChainSpec::make(P, {vec1(3.0)}, vec1(1.0), {vec1(0.0)}, 0.0);
  const auto batch = simulate_finite_chain(spec, 5, 11);
  REQUIRE(batch.length() == 5);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(batch.xs[t](0) == 3.0);
    CHECK(batch.ys[t](0) == 0.0);
  }
}

TEST_CASE("two-state symmetric chain has half-half frequencies") {
  FiniteChainSpec spec = two_state_chain(0.5, true);
  const auto states = simulate_chain_states(spec, 10000, 2024);
  double freq0 = 0.0;
  for (int s : states) freq0 += s == 0 ? 1.0 : 0.0;
  freq0 /= 10000.0;
  CHECK(std::abs(freq0 - 0.5) < 0.02);
}

TEST_CASE("two-state chain marginals match the closed form and the empirical law") {
  FiniteChainSpec spec = two_state_chain(0.25, false);
  const std::size_t T = 12;
  const auto mu = propagated_marginals(spec, T);
  for (std::size_t k = 0; k < T; ++k) {
    const double expect = 0.5 * (1.0 + std::pow(0.5, static_cast<double>(k)));
    CHECK(mu[k](0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(mu[k].sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Empirical check against the propagated marginal at k = 3.
  const int n_rep = 20000;
  double hits = 0.0;
  for (int r = 0; r < n_rep; ++r) {
    const auto states = simulate_chain_states(spec, 4, derive_stream(5, r));
    hits += states[3] == 0 ? 1.0 : 0.0;
  }
  CHECK(std::abs(hits / n_rep - mu[3](0)) < 0.015);
}

TEST_CASE("chain validation errors") {
  Matrix bad(2, 2);
  bad << 0.5, 0.6, 0.25, 0.75;
  CHECK_THROWS_AS(FiniteChainSpec::make(bad, {vec1(0), vec1(1)}, vec1(1.0),
                                        {vec1(0), vec1(0)}, 0.0),
                  std::invalid_argument);
  // Reducible chain: two absorbing states, no unique stationary law.
  Matrix red = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(
      FiniteChainSpec::make_stationary(red, {vec1(0), vec1(1)}, {vec1(0), vec1(0)}, 0.0),
      std::invalid_argument);
}

TEST_CASE("iid standard gaussian states when A = 0") {
  const LdsSpec spec = LdsSpec::make(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const auto batch = simulate_lds(spec, 10000, 31);
  Matrix cov = Matrix::Zero(2, 2);
  for (const auto& x : batch.xs) cov += x * x.transpose();
  cov /= 10000.0;
  CHECK(opnorm(cov - Matrix::Identity(2, 2)) < 0.05);
}

TEST_CASE("scalar lds stationary variance") {
  Matrix A(1, 1), H(1, 1);
  A << 0.5;
  H << 1.0;
  const LdsSpec spec = LdsSpec::make(A, H);
  const auto batch = simulate_lds(spec, 200000, 77);
  double var = 0.0;
  for (const auto& x : batch.xs) var += x(0) * x(0);
  var /= static_cast<double>(batch.length());
  CHECK(var == doctest::Approx(4.0 / 3.0).epsilon(0.05));
}

TEST_CASE("lds batch invariants: Y = X_{t+1}, noise record exact") {
  Matrix A(2, 2);
  A << 0.6, 0.2, 0.0, 0.3;
  Matrix H(2, 2);
  H << 1.0, 0.0, 0.5, 1.0;
  const LdsSpec spec = LdsSpec::make(A, H);
  const auto batch = simulate_lds(spec, 50, 13);
  for (std::size_t t = 0; t < batch.length(); ++t) {
    // Same evaluation order as the simulator: bitwise reproduction.
    const Vector fx = A * batch.xs[t];
    const Vector pred = fx + H * batch.noise[t];
    CHECK((batch.ys[t] - pred).cwiseAbs().maxCoeff() == 0.0);
    if (t + 1 < batch.length()) CHECK((batch.ys[t] - batch.xs[t + 1]).norm() == 0.0);
  }
}

TEST_CASE("truncation flag frequency matches the gaussian tail") {
  Matrix A(1, 1), H(1, 1);
  A << 0.5;
  H << 1.0;
  const LdsSpec spec = LdsSpec::make(A, H, 3.0);
  const std::size_t T = 1000;
  const int n_rep = 200;
  double flagged = 0.0;
  for (int r = 0; r < n_rep; ++r)
    flagged += simulate_lds(spec, T, derive_stream(400, r)).truncated_flag ? 1.0 : 0.0;
  flagged /= n_rep;
  const double q = std::erfc(3.0 / std::sqrt(2.0));  // P(|N(0,1)| > 3)
  const double expect = 1.0 - std::pow(1.0 - q, static_cast<double>(T + 1));
  const double se = std::sqrt(expect * (1.0 - expect) / n_rep);
  CHECK(std::abs(flagged - expect) <= 3.0 * se);
}

TEST_CASE("glm with identity link reproduces the lds bitwise") {
  Matrix A(2, 2);
  A << 0.4, 0.1, -0.2, 0.5;
  Matrix H = Matrix::Identity(2, 2);
  const LdsSpec lds = LdsSpec::make(A, H);
  const GlmSpec glm = GlmSpec::make(A, H, LinkFn::identity(), Vector::Ones(2), 0.9);
  const auto b1 = simulate_lds(lds, 64, 99);
  const auto b2 = simulate_glm(glm, 64, 99);
  REQUIRE(b1.length() == b2.length());
  for (std::size_t t = 0; t < b1.length(); ++t) {
    CHECK((b1.xs[t] - b2.xs[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b1.ys[t] - b2.ys[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("truncated glm states respect the almost-sure bound") {
  Matrix A(1, 1), H(1, 1);
  A << 0.5;
  H << 1.0;
  const double rho = 0.25;
  const double R = 3.0;
  const GlmSpec spec = GlmSpec::make(A, H, LinkFn::leaky_relu(0.5), Vector::Ones(1), rho, R);
  const double b_xbar = 2.0 * 1.0 * 1.0 * R / (1.0 - rho);
  for (int r = 0; r < 20; ++r) {
    const auto batch = simulate_glm(spec, 500, derive_stream(1700, r));
    for (const auto& x : batch.xs) CHECK(std::abs(x(0)) <= b_xbar + 1e-12);
  }
}

TEST_CASE("glm with A = 0 has covariance H H^T") {
  Matrix H(2, 2);
  H << 1.0, 0.0, 0.3, 0.8;
  const GlmSpec spec =
      GlmSpec::make(Matrix::Zero(2, 2), H, LinkFn::leaky_relu(0.5), Vector::Ones(2), 0.5);
  const auto batch = simulate_glm(spec, 40000, 55);
  Matrix cov = Matrix::Zero(2, 2);
  for (const auto& x : batch.xs) cov += x * x.transpose();
  cov /= static_cast<double>(batch.length());
  CHECK(opnorm(cov - H * H.transpose()) < 0.05);
}

TEST_CASE("controllability gramian closed forms") {
  CHECK(opnorm(controllability_gramian(0.5 * Matrix::Identity(2, 2),
                                       Matrix::Identity(2, 2), 1) -
               1.25 * Matrix::Identity(2, 2)) < 1e-14);
  Matrix H(2, 2);
  H << 1.0, 2.0, 0.5, -1.0;
  CHECK(opnorm(controllability_gramian(Matrix::Zero(2, 2), H, 7) - H * H.transpose()) <
        1e-14);
  Matrix A(2, 2);
  A << 0.0, 1.0, 0.0, 0.0;
  Matrix e1(2, 1);
  e1 << 1.0, 0.0;
  const Matrix G = controllability_gramian(A, e1, 1);
  Matrix expect(2, 2);
  expect << 1.0, 0.0, 0.0, 0.0;  // A e1 = 0: only the k = 0 term, rank 1
  CHECK(opnorm(G - expect) < 1e-14);
}

TEST_CASE("gramian monotonicity on random stable pairs") {
  SplitMix64 g(808);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix A(3, 3), H(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        A(i, j) = standard_normal(g);
        H(i, j) = standard_normal(g);
      }
    A *= 0.9 / std::max(spectral_radius(A), 1e-6);
    const int s = static_cast<int>(uniform01(g) * 25);
    const int t = s + 1 + static_cast<int>(uniform01(g) * (50 - s - 1));
    const Matrix Gs = controllability_gramian(A, H, s);
    const Matrix Gt = controllability_gramian(A, H, t);
    CHECK(lambda_min_sym(Gt - Gs) >= -1e-10);
  }
}

TEST_CASE("stability certificate") {
  Matrix A1(1, 1);
  A1 << 0.5;
  CHECK(stability_certificate(A1, 0.5 + 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  Matrix A2 = Matrix::Zero(2, 2);
  A2(0, 0) = 0.9;
  A2(1, 1) = 0.1;
  CHECK(stability_certificate(A2, 0.9 + 1e-12) == doctest::Approx(1.0).epsilon(1e-9));

  Matrix A3(2, 2);
  A3 << 0.5, 10.0, 0.0, 0.5;
  const double tau = stability_certificate(A3, 0.6);
  // Brute-force power scan oracle.
  double brute = 0.0;
  Matrix Ak = Matrix::Identity(2, 2);
  double rk = 1.0;
  for (int k = 0; k <= 500; ++k) {
    brute = std::max(brute, opnorm(Ak) / rk);
    Ak = A3 * Ak;
    rk *= 0.6;
  }
  CHECK(tau == doctest::Approx(brute).epsilon(1e-10));

  CHECK_THROWS_AS(stability_certificate(A3, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(LdsSpec::make(Matrix::Identity(1, 1), Matrix::Identity(1, 1)),
                  std::invalid_argument);

  // rho barely above the spectral radius: the scan cannot settle below the
  // hard cap and must declare failure instead of guessing.
  Matrix A4(2, 2);
  A4 << 0.99, 50.0, 0.0, 0.99;
  CHECK_THROWS_AS(stability_certificate(A4, 0.9903), std::runtime_error);
}

TEST_CASE("propagated marginals: stationarity and cycles") {
  FiniteChainSpec stat = two_state_chain(0.25, true);
  for (const auto& m : propagated_marginals(stat, 8))
    CHECK((m - stat.stationary_dist()).cwiseAbs().maxCoeff() < 1e-12);

  Matrix C = Matrix::Zero(3, 3);
  C(0, 1) = 1.0;
  C(1, 2) = 1.0;
  C(2, 0) = 1.0;
  Vector init(3);
  init << 1.0, 0.0, 0.0;
  FiniteChainSpec cyc = FiniteChainSpec::make(
      C, {vec1(0), vec1(1), vec1(2)}, init, {vec1(0), vec1(0), vec1(0)}, 0.0);
  const auto mu = propagated_marginals(cyc, 6);
  for (std::size_t t = 0; t < 6; ++t)
    for (int k = 0; k < 3; ++k)
      CHECK(mu[t](k) == (static_cast<int>(t) % 3 == k ? 1.0 : 0.0));
}

TEST_CASE("truncation coupling: truncated and plain paths rarely differ") {
  const double delta = 0.1;
  const std::size_t T = 100;
  const double R =
      std::sqrt(2.0) + std::sqrt(2.0 * std::log(static_cast<double>(T) / delta));
  Matrix A(2, 2);
  A << 0.7, 0.1, 0.0, 0.6;
  const LdsSpec plain = LdsSpec::make(A, Matrix::Identity(2, 2));
  const LdsSpec trunc = LdsSpec::make(A, Matrix::Identity(2, 2), R);
  const int n_rep = 2000;
  double differ = 0.0;
  for (int r = 0; r < n_rep; ++r) {
    const auto b1 = simulate_lds(plain, T, derive_stream(2100, r));
    const auto b2 = simulate_lds(trunc, T, derive_stream(2100, r));
    bool same = true;
    for (std::size_t t = 0; t < T && same; ++t)
      same = (b1.xs[t] - b2.xs[t]).cwiseAbs().maxCoeff() == 0.0;
    differ += same ? 0.0 : 1.0;
  }
  differ /= n_rep;
  const double se = std::sqrt(std::max(differ * (1.0 - differ), 1e-6) / n_rep);
  CHECK(differ <= delta + 3.0 * se);
}

TEST_CASE("same-seed determinism") {
  Matrix A(2, 2);
  A << 0.5, 0.2, 0.1, 0.4;
  const LdsSpec spec = LdsSpec::make(A, Matrix::Identity(2, 2), 4.0);
  const auto a = simulate_lds(spec, 128, 5150);
  const auto b = simulate_lds(spec, 128, 5150);
  REQUIRE(a.length() == b.length());
  for (std::size_t t = 0; t < a.length(); ++t) {
    CHECK((a.xs[t] - b.xs[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.ys[t] - b.ys[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.noise[t] - b.noise[t]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(a.truncated_flag == b.truncated_flag);
}

TEST_CASE("link probes: lipschitz and expansive") {
  const LinkFn link = LinkFn::leaky_relu(0.5);
  CHECK(link(0.0) == 0.0);
  SplitMix64 g(661);
  for (int i = 0; i < 10000; ++i) {
    const double x = 30.0 * (uniform01(g) - 0.5), y = 30.0 * (uniform01(g) - 0.5);
    const double d = std::abs(link(x) - link(y));
    CHECK(d <= std::abs(x - y) + 1e-12);
    CHECK(d >= 0.5 * std::abs(x - y) - 1e-12);
  }
  CHECK_THROWS_AS(LinkFn::leaky_relu(0.0), std::invalid_argument);
  CHECK_THROWS_AS(LinkFn::leaky_relu(1.5), std::invalid_argument);
}

TEST_CASE("glm incremental stability in the lyapunov norm") {
  Matrix A(2, 2);
  A << 0.5, 0.3, -0.2, 0.4;
  Vector P(2);
  P << 1.0, 2.0;
  Matrix Pm = P.asDiagonal();
  Matrix Psqi = Vector(P.cwiseSqrt().cwiseInverse()).asDiagonal();
  const double rho = lambda_max_sym(Psqi * A.transpose() * Pm * A * Psqi) + 1e-6;
  REQUIRE(rho < 1.0);
  const GlmSpec spec =
      GlmSpec::make(A, Matrix::Identity(2, 2), LinkFn::leaky_relu(0.5), P, rho);
  SplitMix64 g(4242);
  for (int i = 0; i < 2000; ++i) {
    Vector x(2), y(2);
    for (int j = 0; j < 2; ++j) {
      x(j) = 5.0 * standard_normal(g);
      y(j) = 5.0 * standard_normal(g);
    }
    const Vector dx = spec.link.apply(A * x) - spec.link.apply(A * y);
    const double lhs = dx.dot(Pm * dx);
    const Vector diff = x - y;
    const double rhs = rho * diff.dot(Pm * diff);
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("glm spec validation") {
  Matrix A(1, 1), H(1, 1);
  A << 0.9;
  H << 1.0;
  // a^2 = 0.81 > rho = 0.5: the Lyapunov check must fail.
  CHECK_THROWS_AS(GlmSpec::make(A, H, LinkFn::identity(), Vector::Ones(1), 0.5),
                  std::invalid_argument);
  Matrix Hsing = Matrix::Zero(1, 1);
  A << 0.5;
  CHECK_THROWS_AS(GlmSpec::make(A, Hsing, LinkFn::identity(), Vector::Ones(1), 0.5),
                  std::invalid_argument);
  // Hand-rolled link violating 1-Lipschitzness trips the probe-grid check.
  const LinkFn bad{LinkFn::Tag::leaky_relu, 1.5};
  Matrix H2(1, 1);
  H2 << 1.0;
  CHECK_THROWS_AS(GlmSpec::make(A, H2, bad, Vector::Ones(1), 0.5),
                  std::invalid_argument);
}

TEST_CASE("truncation radius formula") {
  CHECK(truncation_radius(4, 100) ==
        doctest::Approx(2.0 + std::sqrt(10.0 * std::log(100.0))).epsilon(1e-12));
}
