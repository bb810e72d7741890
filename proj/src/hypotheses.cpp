#include "tslab/hypotheses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tslab/rng.hpp"

namespace tslab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Axis-aligned grid over a Euclidean ball of radius B at covering resolution
// delta: spacing 2*delta/sqrt(d) makes the cell half-diagonal delta; nodes in
// the shell are projected back onto the ball (projection is 1-Lipschitz, so
// the covering property survives and the net stays proper).
bool ball_grid_net(double B, double delta, int d, std::size_t cap,
                   std::vector<Vector>& out) {
  out.clear();
  if (B <= 0.0 || delta >= B) {
    // The whole ball sits within delta of the origin.
    out.push_back(Vector::Zero(d));
    return true;
  }
  const double s = 2.0 * delta / std::sqrt(static_cast<double>(d));
  const double reach = B + delta;
  const long kmax = static_cast<long>(std::floor(reach / s));
  Vector g = Vector::Zero(d);
  bool overflow = false;
  std::function<void(int, double)> rec = [&](int axis, double norm_sq) {
    if (overflow) return;
    if (axis == d) {
      if (out.size() >= cap) {
        overflow = true;
        return;
      }
      Vector v = g;
      const double n = std::sqrt(norm_sq);
      if (n > B && n > 0.0) v *= B / n;
      out.push_back(std::move(v));
      return;
    }
    for (long k = -kmax; k <= kmax; ++k) {
      const double c = static_cast<double>(k) * s;
      const double nsq = norm_sq + c * c;
      if (nsq > reach * reach + 1e-15) continue;
      g(axis) = c;
      rec(axis + 1, nsq);
      if (overflow) return;
    }
    g(axis) = 0.0;
  };
  rec(0, 0.0);
  if (overflow) out.clear();
  return !overflow;
}

Vector random_in_ball(SplitMix64& g, int d, double radius) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = standard_normal(g);
  const double n = v.norm();
  if (n == 0.0) return Vector::Zero(d);
  const double r = radius * std::pow(uniform01(g), 1.0 / static_cast<double>(d));
  return (r / n) * v;
}

double mu_at(const Ellipsoid& e, int j) {  // j >= 1
  if (j <= static_cast<int>(e.mu.size())) return e.mu[static_cast<std::size_t>(j - 1)];
  return std::exp(-2.0 * e.beta * static_cast<double>(j));
}

}  // namespace

BasisFn cosine_basis() {
  BasisFn b;
  b.B = std::sqrt(2.0);
  b.q = 0.0;
  b.name = "cosine";
  b.eval = [](int j, double x) -> double {
    if (j <= 0) throw std::invalid_argument("basis index must be >= 1");
    if (j == 1) return 1.0;
    return std::sqrt(2.0) * std::cos(static_cast<double>(j - 1) * kPi * x);
  };
  return b;
}

Ellipsoid make_ellipsoid(double beta, double B_basis, double q_growth,
                         std::vector<double> mu, BasisFn basis) {
  if (!(beta > 0.0) || !(B_basis > 0.0) || !(q_growth >= 0.0))
    throw std::invalid_argument("ellipsoid parameters must be positive (q may be 0)");
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double cap = std::exp(-2.0 * beta * static_cast<double>(j + 1));
    if (mu[j] > cap + 1e-15)
      throw std::invalid_argument("mu_j must satisfy mu_j <= exp(-2 beta j)");
    if (!(mu[j] > 0.0)) throw std::invalid_argument("mu_j must be positive");
  }
  return Ellipsoid{beta, B_basis, q_growth, std::move(mu), std::move(basis)};
}

int atom_index(const std::vector<Vector>& atoms, const Vector& x, double tol) {
  for (std::size_t k = 0; k < atoms.size(); ++k)
    if (atoms[k].size() == x.size() && (atoms[k] - x).cwiseAbs().maxCoeff() <= tol)
      return static_cast<int>(k);
  throw std::invalid_argument("state is not an atom of the finite table family");
}

Vector eval(const HypothesisSpec& family, const Member& member, const Vector& x) {
  if (const auto* lin = std::get_if<LinearBall>(&family)) {
    const auto* m = std::get_if<LinearMember>(&member);
    if (!m) throw std::invalid_argument("linear family expects a linear member");
    if (m->A.cols() != x.size()) throw std::invalid_argument("eval: dimension mismatch");
    (void)lin;
    return m->A * x;
  }
  if (const auto* glm = std::get_if<GlmBall>(&family)) {
    const auto* m = std::get_if<GlmMember>(&member);
    if (!m) throw std::invalid_argument("glm family expects a glm member");
    if (m->A.cols() != x.size()) throw std::invalid_argument("eval: dimension mismatch");
    return glm->link.apply(m->A * x);
  }
  if (const auto* tab = std::get_if<FiniteTable>(&family)) {
    const auto* m = std::get_if<TableMember>(&member);
    if (!m) throw std::invalid_argument("finite table family expects a table member");
    if (m->index < 0 || m->index >= static_cast<int>(tab->functions.size()))
      throw std::invalid_argument("table member index out of range");
    const int k = atom_index(tab->atoms, x);
    return tab->functions[static_cast<std::size_t>(m->index)][static_cast<std::size_t>(k)];
  }
  const auto& ell = std::get<Ellipsoid>(family);
  const auto* m = std::get_if<EllipsoidMember>(&member);
  if (!m) throw std::invalid_argument("ellipsoid family expects an ellipsoid member");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m->theta.size(); ++j)
    acc += m->theta(j) * ell.basis.eval(static_cast<int>(j) + 1, x(0));
  Vector out(1);
  out(0) = acc;
  return out;
}

bool member_in_family(const HypothesisSpec& family, const Member& member, double slack) {
  if (const auto* lin = std::get_if<LinearBall>(&family)) {
    const auto* m = std::get_if<LinearMember>(&member);
    return m && m->A.norm() <= lin->B + slack;
  }
  if (const auto* glm = std::get_if<GlmBall>(&family)) {
    const auto* m = std::get_if<GlmMember>(&member);
    return m && m->A.norm() <= glm->B + slack;
  }
  if (const auto* tab = std::get_if<FiniteTable>(&family)) {
    const auto* m = std::get_if<TableMember>(&member);
    return m && m->index >= 0 && m->index < static_cast<int>(tab->functions.size());
  }
  const auto& ell = std::get<Ellipsoid>(family);
  const auto* m = std::get_if<EllipsoidMember>(&member);
  if (!m) return false;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m->theta.size(); ++j)
    acc += m->theta(j) * m->theta(j) / mu_at(ell, static_cast<int>(j) + 1);
  return acc <= 1.0 + slack;
}

CoverCertificate cover_linear(double B, double B_X, double epsilon, int dx, int dy,
                              std::size_t max_elements) {
  if (!(epsilon > 0.0) || !(B_X > 0.0) || !(B >= 0.0))
    throw std::invalid_argument("cover_linear: epsilon and B_X must be positive");
  if (dx < 1 || dy < 1) throw std::invalid_argument("cover_linear: dimensions must be >= 1");
  const int d = dx * dy;
  const double delta = epsilon / B_X;
  CoverCertificate cert;
  cert.epsilon = epsilon;
  cert.sup_norm_bound = B;
  cert.log_cardinality =
      static_cast<double>(d) * std::log1p(2.0 * B * B_X / epsilon);
  std::vector<Vector> nodes;
  if (!ball_grid_net(B, delta, d, max_elements, nodes)) {
    cert.elements_omitted = true;
    return cert;
  }
  cert.elements.reserve(nodes.size());
  for (const auto& v : nodes) {
    Matrix A(dy, dx);
    for (int i = 0; i < dy; ++i)
      for (int j = 0; j < dx; ++j) A(i, j) = v(i * dx + j);
    cert.elements.push_back(LinearMember{std::move(A)});
  }
  return cert;
}

int ellipsoid_m_eps(double beta, double B, double q, double epsilon) {
  if (!(beta > 0.0) || !(B > 0.0) || !(q > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("ellipsoid_m_eps: parameters must be positive");
  const double rhs = std::abs(std::log(4.0 * B / (beta * epsilon))) / beta;
  auto lhs = [&](int m) {
    return static_cast<double>(m) - (q / beta) * std::log(static_cast<double>(m));
  };
  for (int m = 1; m < 100000000; ++m)
    if (lhs(m) >= rhs) return m;
  throw std::runtime_error("ellipsoid_m_eps: no solution below scan cap");
}

CoverCertificate ellipsoid_cover(const Ellipsoid& spec, double epsilon,
                                 std::size_t max_elements) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ellipsoid_cover: epsilon must be > 0");
  const int m = ellipsoid_m_eps(spec.beta, spec.B_basis,
                                std::max(spec.q_growth, 1e-9), epsilon);
  // Tail after truncating at m, by the closed-form bound B m^q e^{-beta m}/beta.
  const double mq_tail = std::pow(static_cast<double>(m), spec.q_growth);
  const double tail = spec.B_basis * mq_tail * std::exp(-spec.beta * m) / spec.beta;
  if (tail > epsilon / 4.0 + 1e-12)
    throw std::logic_error("ellipsoid_cover: truncation tail exceeds epsilon/4");
  return ellipsoid_cover_truncated(spec, epsilon, m, max_elements);
}

CoverCertificate ellipsoid_cover_truncated(const Ellipsoid& spec, double epsilon, int m,
                                           std::size_t max_elements) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ellipsoid_cover: epsilon must be > 0");
  if (m < 1) throw std::invalid_argument("ellipsoid_cover: m must be >= 1");
  const double mq = std::pow(static_cast<double>(m), spec.q_growth);
  const double delta = epsilon / (4.0 * spec.B_basis * mq);
  CoverCertificate cert;
  cert.epsilon = epsilon;
  cert.sup_norm_bound = spec.B_basis;
  cert.log_cardinality =
      static_cast<double>(m) * std::log1p(8.0 * spec.B_basis * mq / epsilon);
  cert.precondition_warning = true;
  cert.warning =
      "hypercontractivity constant for this net requires epsilon <= inf L2 norm "
      "over the covered subset; not checkable from the cover alone";
  std::vector<Vector> nodes;
  if (!ball_grid_net(1.0, delta, m, max_elements, nodes)) {
    cert.elements_omitted = true;
    return cert;
  }
  cert.elements.reserve(nodes.size());
  for (const auto& u : nodes) {
    Vector theta(m);
    for (int j = 0; j < m; ++j) theta(j) = std::sqrt(mu_at(spec, j + 1)) * u(j);
    cert.elements.push_back(EllipsoidMember{std::move(theta)});
  }
  return cert;
}

double ellipsoid_hyper_constant(int m_eps, double K, double B, double q) {
  if (m_eps < 1) throw std::invalid_argument("m_eps must be >= 1 by construction");
  if (!(K >= 1.0)) throw std::invalid_argument("density-ratio bound K must be >= 1");
  return 1.0 + 7.0 * K * K * K * std::pow(B, 4.0) *
                   std::pow(static_cast<double>(m_eps), 4.0 * q + 2.0);
}

CoverCheck certify_linear_cover(const CoverCertificate& cert, double B, double B_X,
                                int dx, int dy, int n_probes, int n_states,
                                std::uint64_t seed, double slack) {
  CoverCheck check;
  if (cert.elements_omitted || cert.elements.empty()) return check;
  SplitMix64 g(seed);
  std::vector<Vector> states(static_cast<std::size_t>(n_states));
  for (auto& x : states) x = random_in_ball(g, dx, B_X);
  check.certified = true;
  for (int p = 0; p < n_probes; ++p) {
    Vector v = random_in_ball(g, dx * dy, B);
    Matrix A(dy, dx);
    for (int i = 0; i < dy; ++i)
      for (int j = 0; j < dx; ++j) A(i, j) = v(i * dx + j);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : cert.elements) {
      const Matrix& Ae = std::get<LinearMember>(e).A;
      double sup = 0.0;
      for (const auto& x : states) sup = std::max(sup, ((A - Ae) * x).norm());
      best = std::min(best, sup);
      if (best <= cert.epsilon + slack) break;
    }
    check.max_probe_dist = std::max(check.max_probe_dist, best);
    if (best > cert.epsilon + slack) check.certified = false;
  }
  return check;
}

CoverCheck certify_ellipsoid_cover(const Ellipsoid& spec, const CoverCertificate& cert,
                                   int n_probes, int n_states, std::uint64_t seed,
                                   double slack) {
  CoverCheck check;
  if (cert.elements_omitted || cert.elements.empty()) return check;
  const int m_cover = static_cast<int>(std::get<EllipsoidMember>(cert.elements.front()).theta.size());
  const int m_probe = m_cover + 5;  // probe members carry extra tail coordinates
  SplitMix64 g(seed);
  std::vector<double> states(static_cast<std::size_t>(n_states));
  for (auto& x : states) x = uniform01(g);
  auto eval_theta = [&](const Vector& theta, double x) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      acc += theta(j) * spec.basis.eval(static_cast<int>(j) + 1, x);
    return acc;
  };
  check.certified = true;
  for (int p = 0; p < n_probes; ++p) {
    Vector u = random_in_ball(g, m_probe, 1.0);
    Vector theta(m_probe);
    for (int j = 0; j < m_probe; ++j) theta(j) = std::sqrt(mu_at(spec, j + 1)) * u(j);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : cert.elements) {
      const Vector& te = std::get<EllipsoidMember>(e).theta;
      double sup = 0.0;
      for (double x : states) {
        Vector diff = theta;
        for (Eigen::Index j = 0; j < te.size(); ++j) diff(j) -= te(j);
        sup = std::max(sup, std::abs(eval_theta(diff, x)));
      }
      best = std::min(best, sup);
      if (best <= cert.epsilon + slack) break;
    }
    check.max_probe_dist = std::max(check.max_probe_dist, best);
    if (best > cert.epsilon + slack) check.certified = false;
  }
  return check;
}

}  // namespace tslab
