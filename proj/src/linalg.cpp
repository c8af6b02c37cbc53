#include "linpred/linalg.hpp"

#include <cmath>

#include "linpred/error.hpp"

namespace linpred {

Eigen::MatrixXcd ridge_solve(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b,
                             std::optional<double> eps) {
  require(a.rows() == b.rows(), "least-squares row count mismatch");
  double e = 0.0;
  if (eps) {
    require(*eps >= 0.0, "ridge must be nonnegative");
    e = *eps;
  } else {
    double dmax = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      dmax = std::max(dmax, a.col(j).squaredNorm());
    }
    e = 1e-9 * dmax;
  }
  if (e == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    if (qr.rank() < a.cols()) {
      fail(ErrorCode::Singular,
           "calibration system is singular (rank " + std::to_string(qr.rank()) +
               " of " + std::to_string(a.cols()) +
               "); supply a positive ridge");
    }
    return qr.solve(b);
  }
  const auto n = a.cols();
  Eigen::MatrixXcd aug(a.rows() + n, n);
  aug.topRows(a.rows()) = a;
  aug.bottomRows(n) = std::sqrt(e) * Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(a.rows() + n, b.cols());
  rhs.topRows(a.rows()) = b;
  return aug.householderQr().solve(rhs);
}

RightSingular right_singular(const Eigen::MatrixXcd &a) {
  const auto cols = a.cols();
  RightSingular out;
  if (a.rows() >= cols) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinV);
    out.v = svd.matrixV();
    const auto &s = svd.singularValues();
    out.sigma.assign(s.data(), s.data() + s.size());
    return out;
  }
  // Wide matrix: pad with zero rows so V is square.
  Eigen::MatrixXcd sq = Eigen::MatrixXcd::Zero(cols, cols);
  sq.topRows(a.rows()) = a;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(sq, Eigen::ComputeThinV);
  out.v = svd.matrixV();
  const auto &s = svd.singularValues();
  out.sigma.assign(s.data(), s.data() + s.size());
  return out;
}

void normalize_phase(Eigen::VectorXcd &v) {
  const double vmax = v.cwiseAbs().maxCoeff();
  if (vmax == 0.0) {
    return;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-10 * vmax) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      return;
    }
  }
}

} // namespace linpred
