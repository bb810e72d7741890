#ifndef TSLAB_HYPOTHESES_HPP
#define TSLAB_HYPOTHESES_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "tslab/processes.hpp"

namespace tslab {

// Orthonormal system evaluator with declared growth bound ||phi_n||_inf <= B n^q.
struct BasisFn {
  std::function<double(int j, double x)> eval;  // j >= 1
  double B = 1.0;
  double q = 0.0;
  std::string name;
};

// Built-in cosine system on [0,1]: phi_1 = 1, phi_n(x) = sqrt(2) cos((n-1) pi x).
// Orthonormal in L^2([0,1]); bound B = sqrt(2), q = 0.
BasisFn cosine_basis();

struct LinearBall {
  double B;
  int dx;
  int dy;
};

struct GlmBall {
  double B;
  LinkFn link;
  int dx;
};

// functions[i][k] is the value of member i at atom k. The atom list pins the
// state -> index mapping eval() needs.
struct FiniteTable {
  std::vector<std::vector<Vector>> functions;
  std::vector<Vector> atoms;
};

struct Ellipsoid {
  double beta;
  double B_basis;
  double q_growth;
  std::vector<double> mu;  // mu[j-1] = mu_j, validated <= e^{-2 beta j}
  BasisFn basis;
};

using HypothesisSpec = std::variant<LinearBall, GlmBall, FiniteTable, Ellipsoid>;

struct LinearMember {
  Matrix A;
};
struct GlmMember {
  Matrix A;
};
struct TableMember {
  int index;
};
struct EllipsoidMember {
  Vector theta;  // theta(j-1) = theta_j, truncated expansion
};

using Member = std::variant<LinearMember, GlmMember, TableMember, EllipsoidMember>;

Ellipsoid make_ellipsoid(double beta, double B_basis, double q_growth,
                         std::vector<double> mu, BasisFn basis);

// f(x) for a family member. Throws on dimension mismatch, table lookups at
// non-atom states, and member/family tag mismatches.
Vector eval(const HypothesisSpec& family, const Member& member, const Vector& x);

// Parameter-norm membership check (ball radius + 1e-12 slack; table index range).
bool member_in_family(const HypothesisSpec& family, const Member& member,
                      double slack = 1e-12);

int atom_index(const std::vector<Vector>& atoms, const Vector& x, double tol = 1e-12);

struct CoverCertificate {
  double epsilon = 0.0;
  std::vector<Member> elements;
  bool elements_omitted = false;  // cardinality cap hit: log bound only
  double log_cardinality = 0.0;   // analytic bound on log |net|
  double sup_norm_bound = 0.0;    // B used
  bool precondition_warning = false;
  std::string warning;
};

// Volumetric grid net of the Frobenius ball {||A||_F <= B} certifying sup-norm
// resolution epsilon over {||x||_2 <= B_X} (parameter resolution delta = eps/B_X).
// log_cardinality = dx*dy*log(1 + 2 B B_X / eps).
CoverCertificate cover_linear(double B, double B_X, double epsilon, int dx, int dy,
                              std::size_t max_elements = 1000000);

// Smallest integer m >= 1 with m - (q/beta) log m >= (1/beta) |log(4B/(beta eps))|.
int ellipsoid_m_eps(double beta, double B, double q, double epsilon);

// Net of the ellipsoid at sup-norm resolution epsilon: truncate at m_eps, cover
// the weighted parameter ball at delta = eps/(4 B m^q).
// log_cardinality = m_eps * log(1 + 8 B m_eps^q / eps).
CoverCertificate ellipsoid_cover(const Ellipsoid& spec, double epsilon,
                                 std::size_t max_elements = 1000000);

// Same construction at a caller-chosen truncation order m.
CoverCertificate ellipsoid_cover_truncated(const Ellipsoid& spec, double epsilon, int m,
                                           std::size_t max_elements = 1000000);

// C_eps = 1 + 7 K^3 B^4 m_eps^(4q+2); requires K >= 1, m_eps >= 1.
double ellipsoid_hyper_constant(int m_eps, double K, double B, double q);

// Certification probe: every sampled family member must have a cover element
// within eps (+ slack) in sup-norm over the sampled state domain.
struct CoverCheck {
  double max_probe_dist = 0.0;
  bool certified = false;
};

CoverCheck certify_linear_cover(const CoverCertificate& cert, double B, double B_X,
                                int dx, int dy, int n_probes, int n_states,
                                std::uint64_t seed, double slack = 1e-9);

CoverCheck certify_ellipsoid_cover(const Ellipsoid& spec, const CoverCertificate& cert,
                                   int n_probes, int n_states, std::uint64_t seed,
                                   double slack = 1e-9);

}  // namespace tslab

#endif  // TSLAB_HYPOTHESES_HPP
