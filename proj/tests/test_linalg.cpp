#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmx/linalg.hpp"

using pmx::Mat;
using pmx::Vec;
namespace linalg = pmx::linalg;

namespace {

Mat randn(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    return M;
}

// Random matrix with exact rank k, entries O(1).
Mat rank_k(int rows, int cols, int k, std::mt19937_64& rng) {
    if (k == 0) return Mat::Zero(rows, cols);
    return randn(rows, k, rng) * randn(k, cols, rng) / std::sqrt(static_cast<double>(k));
}

}  // namespace

TEST_CASE("Penrose identities across shapes and ranks") {
    std::mt19937_64 rng(7);
    for (auto [rows, cols] : {std::pair{3, 3}, {5, 3}, {3, 5}, {6, 6}, {1, 4}}) {
        for (int k = 0; k <= std::min(rows, cols); ++k) {
            Mat M = rank_k(rows, cols, k, rng);
            Mat P = linalg::pinv(M);
            double s = std::max(1.0, M.norm());
            CHECK((M * P * M - M).norm() <= 1e-8 * s);
            CHECK((P * M * P - P).norm() <= 1e-8 * s);
            CHECK((M * P - (M * P).transpose()).norm() <= 1e-8 * s);
            CHECK((P * M - (P * M).transpose()).norm() <= 1e-8 * s);
        }
    }
}

TEST_CASE("svd factors and rank detection") {
    std::mt19937_64 rng(11);
    Mat M = rank_k(6, 4, 2, rng);
    auto f = linalg::svd(M);
    CHECK(f.rank == 2);
    CHECK(f.sigma.size() == 4);
    for (int i = 1; i < f.sigma.size(); ++i) CHECK(f.sigma[i] <= f.sigma[i - 1]);
    CHECK((f.U.transpose() * f.U - Mat::Identity(6, 6)).norm() <= 1e-12);
    CHECK((f.V.transpose() * f.V - Mat::Identity(4, 4)).norm() <= 1e-12);
    Mat rebuilt = f.U.leftCols(4) * f.sigma.asDiagonal() * f.V.transpose();
    CHECK((rebuilt - M).norm() <= 1e-12 * M.norm());
}

TEST_CASE("nullspace basis is orthonormal and annihilated") {
    std::mt19937_64 rng(13);
    for (int k = 0; k <= 4; ++k) {
        Mat M = rank_k(5, 4, k, rng);
        Mat Z = linalg::nullspace_basis(M);
        CHECK(Z.cols() == 4 - k);
        if (Z.cols() > 0) {
            CHECK((Z.transpose() * Z - Mat::Identity(Z.cols(), Z.cols())).norm() <= 1e-12);
            CHECK((M * Z).norm() <= 1e-8 * std::max(1.0, M.norm()));
        }
    }
}

TEST_CASE("minimum-norm solution of a consistent singular system") {
    std::mt19937_64 rng(17);
    Mat M = rank_k(4, 4, 2, rng);
    Vec x_true = M.transpose() * randn(4, 1, rng);  // in the row space
    Vec b = M * x_true;
    auto sol = linalg::solve_min_norm(M, b);
    CHECK(sol.residual <= 1e-10 * std::max(1.0, b.norm()));
    CHECK(sol.rank == 2);
    CHECK((sol.x - x_true).norm() <= 1e-8 * std::max(1.0, x_true.norm()));
    // Any nullspace addition strictly increases the norm.
    Mat Z = linalg::nullspace_basis(M);
    for (int j = 0; j < Z.cols(); ++j) {
        CHECK(std::abs(sol.x.dot(Z.col(j))) <= 1e-9);
        CHECK((sol.x + Z.col(j)).norm() > sol.x.norm());
    }
}

TEST_CASE("least-squares residual for an inconsistent system") {
    Mat M(3, 2);
    M << 1, 0, 0, 1, 0, 0;
    Vec b(3);
    b << 1, 2, 3;
    auto sol = linalg::solve_min_norm(M, b);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(2.0));
    CHECK(sol.residual == doctest::Approx(3.0));
}

TEST_CASE("monodromy-shaped golden case") {
    // M = (1 - exp(-2 pi)) * e1 (1,1)': the defect matrix of a one-sided
    // periodic problem. Its complement projector is diag(0, 1) exactly.
    double a = 1.0 - std::exp(-2.0 * std::numbers::pi);
    Mat M(2, 2);
    M << a, a, 0, 0;
    Mat P = linalg::pinv(M);
    Mat Pref(2, 2);
    Pref << 1.0 / (2.0 * a), 0, 1.0 / (2.0 * a), 0;
    CHECK((P - Pref).norm() <= 1e-12);
    Mat proj = Mat::Identity(2, 2) - M * P;
    Mat ref(2, 2);
    ref << 0, 0, 0, 1;
    CHECK((proj - ref).norm() <= 1e-12);
}

TEST_CASE("scale floor suppresses truncation-level singular values") {
    // A structurally zero defect contaminated by integrator noise: with the
    // problem scale supplied, the rank collapses to zero; without it, the
    // noise masquerades as full rank.
    Mat M(2, 2);
    M << 3e-12, -1e-12, 2e-12, 5e-12;
    CHECK(linalg::svd(M, 1e-10, 10.0).rank == 0);
    CHECK(linalg::svd(M, 1e-10, 0.0).rank == 2);
    CHECK(linalg::nullspace_basis(M, 1e-10, 10.0).cols() == 2);
    // Min-norm solve with the scale refuses to divide by noise.
    Vec b(2);
    b << 1, 1;
    auto guarded = linalg::solve_min_norm(M, b, 1e-10, 10.0);
    CHECK(guarded.rank == 0);
    CHECK(guarded.x.norm() == 0.0);
}

TEST_CASE("zero and identity edge cases") {
    CHECK(linalg::pinv(Mat::Zero(3, 2)).isZero(0.0));
    Mat I = Mat::Identity(3, 3);
    CHECK((linalg::pinv(I) - I).norm() <= 1e-14);
    CHECK(linalg::nullspace_basis(I).cols() == 0);
    auto f = linalg::svd(Mat::Zero(2, 2));
    CHECK(f.rank == 0);
}
