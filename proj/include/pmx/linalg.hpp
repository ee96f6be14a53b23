#pragma once

#include <Eigen/Dense>

namespace pmx {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace linalg {

// All rank decisions use the cutoff
//     sigma_i > rtol * max(sigma_max, scale).
// With scale = 0 this is the usual relative rule. Callers working with
// matrices that are structurally near zero (a monodromy defect E - F(w), a
// Gramian of an unobservable system) pass the natural magnitude of the
// problem as scale, so that numerical junk in an exactly-singular matrix is
// not mistaken for full rank.

struct SvdFactors {
    Mat U;      // left singular vectors (full)
    Vec sigma;  // all min(rows, cols) singular values, non-increasing
    Mat V;      // right singular vectors (full)
    int rank = 0;
};

SvdFactors svd(const Mat& M, double rtol = 1e-10, double scale = 0.0);

Mat pinv(const Mat& M, double rtol = 1e-10, double scale = 0.0);

// Columns form an orthonormal basis of the nullspace (cols - rank of them).
Mat nullspace_basis(const Mat& M, double rtol = 1e-10, double scale = 0.0);

struct MinNormSolution {
    Vec x;
    double residual = 0.0;  // ||Mx - b||_2
    int rank = 0;
};

// Minimum-norm least-squares solution x = M^+ b.
MinNormSolution solve_min_norm(const Mat& M, const Vec& b, double rtol = 1e-10,
                               double scale = 0.0);

}  // namespace linalg
}  // namespace pmx
