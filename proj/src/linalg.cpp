#include "pmx/linalg.hpp"

#include <stdexcept>

namespace pmx::linalg {

namespace {

int effective_rank(const Vec& sigma, double rtol, double scale) {
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    const double cutoff = rtol * std::max(smax, scale);
    int r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff) ++r;
    return r;
}

}  // namespace

SvdFactors svd(const Mat& M, double rtol, double scale) {
    if (!M.allFinite()) throw std::invalid_argument("svd: matrix has non-finite entries");
    Eigen::JacobiSVD<Mat> dec(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (dec.info() != Eigen::Success) throw std::runtime_error("svd did not converge");
    SvdFactors f;
    f.U = dec.matrixU();
    f.sigma = dec.singularValues();
    f.V = dec.matrixV();
    f.rank = effective_rank(f.sigma, rtol, scale);
    return f;
}

Mat pinv(const Mat& M, double rtol, double scale) {
    const SvdFactors f = svd(M, rtol, scale);
    Mat out = Mat::Zero(M.cols(), M.rows());
    for (int i = 0; i < f.rank; ++i)
        out += (1.0 / f.sigma(i)) * f.V.col(i) * f.U.col(i).transpose();
    return out;
}

Mat nullspace_basis(const Mat& M, double rtol, double scale) {
    const SvdFactors f = svd(M, rtol, scale);
    return f.V.rightCols(M.cols() - f.rank);
}

MinNormSolution solve_min_norm(const Mat& M, const Vec& b, double rtol, double scale) {
    if (b.size() != M.rows()) throw std::invalid_argument("solve_min_norm: size mismatch");
    const SvdFactors f = svd(M, rtol, scale);
    MinNormSolution s;
    s.rank = f.rank;
    s.x = Vec::Zero(M.cols());
    for (int i = 0; i < f.rank; ++i)
        s.x += (f.U.col(i).dot(b) / f.sigma(i)) * f.V.col(i);
    s.residual = (M * s.x - b).norm();
    return s;
}

}  // namespace pmx::linalg
