#ifndef TSLAB_LINALG_HPP
#define TSLAB_LINALG_HPP

#include <Eigen/Dense>

namespace tslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest singular value. Jacobi for small matrices, divide-and-conquer for
// large ones (dependency matrices reach T x T with T in the thousands).
inline double opnorm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (std::min(m.rows(), m.cols()) <= 32)
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

inline double spectral_radius(const Matrix& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

inline double lambda_min_sym(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvalues().minCoeff();
}

inline double lambda_max_sym(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvalues().maxCoeff();
}

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix. Eigenvalues below
// rtol * lambda_max are treated as zero.
inline Matrix pinv_psd(const Matrix& s, double rtol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& ev = es.eigenvalues();
  const double cut = rtol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cut && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// General pseudo-inverse via SVD; singular values below rtol * sigma_max zeroed.
inline Matrix pinv(const Matrix& m, double rtol = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = rtol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline bool is_psd(const Matrix& s, double tol = 1e-10) {
  return lambda_min_sym(0.5 * (s + s.transpose())) >= -tol;
}

}  // namespace tslab

#endif  // TSLAB_LINALG_HPP
