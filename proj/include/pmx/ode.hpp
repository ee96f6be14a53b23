#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "pmx/linalg.hpp"

namespace pmx {

// Uniform grid on [0, omega] with an even number of steps N; node i is at
// t_i = i*omega/N. An even N makes composite Simpson quadrature applicable.
class Grid {
public:
    Grid(double omega, int steps);

    double omega() const noexcept { return omega_; }
    int steps() const noexcept { return steps_; }
    int nodes() const noexcept { return steps_ + 1; }
    double step() const noexcept { return omega_ / steps_; }
    double node(int i) const { return omega_ * i / steps_; }
    double mid(int i) const { return omega_ * (2 * i + 1) / (2.0 * steps_); }

    // Composite Simpson weight of node i: (h/3) * {1, 4, 2, ..., 2, 4, 1}.
    double simpson_weight(int i) const;

private:
    double omega_;
    int steps_;
};

namespace ode {

using MatFn = std::function<Mat(double)>;
using VecFn = std::function<Vec(double)>;

// Trajectory entries exceeded 1e300 during propagation.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Classical RK4 for X' = M(t) X, X(0) = I. Returns one dim x dim matrix per
// grid node. M is evaluated at nodes and exact midpoints (full fourth order).
std::vector<Mat> propagate_fundamental(const MatFn& M, int dim, const Grid& grid);

// RK4 for Y' = -Y M(t), Y(0) = I; Y(t) = X(t)^{-1} without per-node inversion.
std::vector<Mat> propagate_inverse_fundamental(const MatFn& M, int dim, const Grid& grid);

// RK4 for x' = M(t) x + g(t), x(0) = x0. Row i of the result is x(t_i).
Mat propagate_affine(const MatFn& M, const VecFn& g, const Vec& x0, const Grid& grid);

// Composite Simpson quadrature of node samples (size N+1).
double simpson(const Grid& grid, const std::vector<double>& samples);

// L2 inner product of two node-sampled signals ((N+1) x d each) by Simpson:
// integral of a(t).b(t) dt.
double l2_inner(const Grid& grid, const Mat& a, const Mat& b);

double l2_norm(const Grid& grid, const Mat& a);

}  // namespace ode
}  // namespace pmx
