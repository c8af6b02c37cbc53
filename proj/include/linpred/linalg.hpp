#pragma once

// Small dense linear-algebra helpers on top of Eigen.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "linpred/grid.hpp"

namespace linpred {

using RowMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// argmin ||A X - B||^2 + eps ||X||^2, one QR for all right-hand sides.
// eps = nullopt uses 1e-9 * max_j ||A e_j||^2. eps = 0 throws
// ErrorCode::Singular when A is rank deficient.
Eigen::MatrixXcd ridge_solve(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b,
                             std::optional<double> eps = std::nullopt);

struct RightSingular {
  std::vector<double> sigma; // descending, padded with zeros to cols
  Eigen::MatrixXcd v;        // cols x cols, column j pairs with sigma[j]
};

RightSingular right_singular(const Eigen::MatrixXcd &a);

// Rotate so the first entry of magnitude > 1e-10 * max is real positive.
void normalize_phase(Eigen::VectorXcd &v);

} // namespace linpred
