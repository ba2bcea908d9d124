#include "pgm/linalg.hpp"

#include <cmath>

#include "pgm/errors.hpp"

namespace pgm {

CholeskyFactor CholeskyFactor::compute(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw DimensionError("Cholesky: matrix must be square");

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (int k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) throw CholeskyFailure(n, j);
    l(j, j) = std::sqrt(pivot);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return CholeskyFactor(std::move(l));
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double CholeskyFactor::mahalanobis_sq(const Eigen::VectorXd& r) const {
  Eigen::VectorXd y = l_.triangularView<Eigen::Lower>().solve(r);
  return y.squaredNorm();
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor_value) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m));
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(floor_value);
  return symmetrized(es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose());
}

Eigen::MatrixXd ridge_to_spd(const Eigen::MatrixXd& m, double* eps_used) {
  Eigen::MatrixXd c = symmetrized(m);
  const int d = static_cast<int>(c.rows());
  if (eps_used != nullptr) *eps_used = 0.0;

  auto factors = [](const Eigen::MatrixXd& x) {
    try {
      (void)CholeskyFactor::compute(x);
      return true;
    } catch (const CholeskyFailure&) {
      return false;
    }
  };

  if (factors(c)) return c;

  double eps = std::max(1e-8, 1e-6 * c.trace() / static_cast<double>(d));
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::MatrixXd repaired = c + eps * Eigen::MatrixXd::Identity(d, d);
    if (factors(repaired)) {
      if (eps_used != nullptr) *eps_used = eps;
      return repaired;
    }
    eps *= 10.0;
  }
  throw CholeskyFailure(d, -1);  // unreachable for finite input: eps grows past any deficit
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m));
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrized(es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace pgm
