#pragma once

#include <vector>

#include "pmx/ode.hpp"

namespace pmx::bvp {

// Solution of the periodic two-point problem x' = M(t)x + g(t), x(0) = x(w),
// by single shooting: with fundamental matrix F and zero-start particular q,
// the boundary condition reads (I - F(w)) c = q(w). The monodromy may be
// singular, so c is the minimum-norm least-squares solution and the periodic
// homogeneous solutions F(t) v, v in null(I - F(w)), are reported as a basis.
struct PeriodicSolution {
    Mat particular;           // (N+1) x d node values, row per node
    std::vector<Mat> kernel;  // periodic homogeneous solutions, initial values orthonormal
    Vec initial;              // the shooting constant c = x(0)
    double residual = 0.0;    // ||(I - F(w)) c - q(w)||_2
    bool solvable = false;    // residual <= solve_tol * max(1, ||q(w)||)
};

PeriodicSolution solve_periodic(const ode::MatFn& M, const ode::VecFn& g, int dim,
                                const Grid& grid, double rank_tol = 1e-10,
                                double solve_tol = 1e-6);

// Number of independent periodic solutions of x' = M(t)x.
int kernel_dimension(const ode::MatFn& M, int dim, const Grid& grid, double rank_tol = 1e-10);

}  // namespace pmx::bvp
