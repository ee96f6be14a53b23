#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pmx/bvp.hpp"
#include "pmx/observer.hpp"

namespace testsupport {

using pmx::Grid;
using pmx::Mat;
using pmx::Vec;

// Structured random systems cycling through four shapes: stable generic,
// integrator block with a hidden direction, resonant oscillator, and a
// triangular shape with a rank-deficient observation. B is the identity.
struct Case {
    int kind = 0;
    Mat A, B, H;
    pmx::observer::System sys;  // constant-matrix closures over A, B, H
};

Case make_case(int idx, std::mt19937_64& rng);

pmx::ode::MatFn const_mat(const Mat& M);
pmx::ode::VecFn zero_vec(int d);
pmx::ode::MatFn adjoint_coeff(const pmx::observer::System& sys);
pmx::ode::MatFn coupled_coeff(const pmx::observer::System& sys);

// Node samples of a callable field, one row per grid node.
Mat sample(const pmx::ode::VecFn& f, int d, const Grid& grid);

// Node-sampled field with a linear-interpolation callable: exact at nodes,
// first order in between (the shared convention for synthetic test inputs).
pmx::ode::VecFn interp_fn(Mat vals, const Grid& grid);

// First-harmonic random functional c0 + c1 cos t + c2 sin t per component.
Mat random_trig_samples(int n, const Grid& grid, std::mt19937_64& rng);

// Periodic kernel trajectories of x' = M(t)x (initial values orthonormal).
std::vector<Mat> periodic_kernel(const pmx::ode::MatFn& M, int dim, const Grid& grid,
                                 double rank_tol);

// L2-projection of a sampled functional away from the p-parts of the coupled
// kernel, making the estimator problem compatible.
Mat project_feasible(const pmx::observer::System& sys, const Mat& ellv, const Grid& grid,
                     double rank_tol);

// Dense trapezoidal (Crank-Nicolson) discretization of the periodic problem
// w' = C(t)w + g(t), w(0) = w(omega): midpoint coefficients, wraparound
// unknowns w_0..w_{N-1}, minimum-norm least-squares solve. Entirely
// independent of the shooting solver; used as a cross-check oracle.
struct FdSolution {
    Mat traj;  // (N+1) x d, last row repeats the first
    double residual = 0.0;
};

FdSolution fd_periodic(const pmx::ode::MatFn& C, const pmx::ode::VecFn& g, int dim,
                       const Grid& grid);

}  // namespace testsupport
