#pragma once

#include <cstdint>
#include <vector>

#include "pmx/bvp.hpp"

namespace pmx::observer {

// The observed system
//     x'(t) - A(t) x(t) = B(t) f(t),   x(0) = x(w),
//     y(t) = H(t) x(t) + eta(t)
// with A n x n, B n x r, H m x n on [0, w]. The horizon lives in the Grid.
struct System {
    int n = 0, r = 0, m = 0;
    ode::MatFn A, B, H;
};

struct Tolerances {
    double rank_tol = 1e-10;  // relative rank cutoff for all decompositions
    double feas_tol = 1e-6;   // orthogonality-defect threshold scale
    double bvp_tol = 1e-6;    // shooting compatibility threshold scale
};

// The observed signal cannot be produced by the model at working tolerance.
class IncompatibleObservation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The supplied input admits no periodic state trajectory.
class IncompatibleInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An internal consistency check failed badly enough to distrust the result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Feasibility: a functional integral(l(t), x(t)) dt has finite guaranteed
// estimation error iff P h(w) is orthogonal to the nullspace of the projected
// Gramian W, where everything is built from the adjoint fundamental matrix.

// P = I - M M^+ with M = I - Phi(w, 0), Phi the fundamental matrix of
// z' = -A'(t) z. Orthogonal projector onto null(M').
Mat compute_P(const System& sys, const Grid& grid, double rank_tol = 1e-10);

// W = integral of P Phi(w,s) H'(s)H(s) Phi(w,s)' P ds, symmetrized.
Mat compute_W(const System& sys, const Grid& grid, double rank_tol = 1e-10);

// Trajectory of h' = -A'(t) h + l(t), h(0) = 0; row per node.
Mat compute_h(const System& sys, const ode::VecFn& ell, const Grid& grid);

struct FeasibilityReport {
    Mat P, W;
    Vec h_end, Ph_end;
    Mat W_nullspace;        // orthonormal columns spanning null(W)
    double defect = 0.0;    // max |<P h(w), v>| over nullspace columns v
    double threshold = 0.0; // feas_tol * max(1, ||h(w)||)
    bool feasible = false;
};

FeasibilityReport check_feasibility(const System& sys, const ode::VecFn& ell,
                                    const Grid& grid, const Tolerances& tol = {});

// Independent Fredholm check used as a test oracle: the estimator BVP with
// forcing (-l, 0) is solvable iff the forcing is orthogonal to every periodic
// solution of the adjoint homogeneous system v' = -C(t)' v.
struct OracleVerdict {
    bool feasible = false;
    double defect = 0.0;     // max normalized |<forcing, kernel element>|
    double threshold = 0.0;  // feas_tol * max(1, ||l||)
    int adjoint_kernel_dim = 0;
};

OracleVerdict feasibility_oracle(const System& sys, const ode::VecFn& ell,
                                 const Grid& grid, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// Minimax estimator: solve the coupled periodic system
//     z' = -A' z + H'H p - l,    p' = A p + B B' z
// and read off the estimator kernel u(t) = H(t) p(t) and the guaranteed error
// sigma = integral (l(t), p(t)) dt. When the coupled problem is incompatible
// the error is infinite (reported, not thrown).

struct MinimaxEstimate {
    bool finite = false;
    double sigma = 0.0;         // +infinity when not finite
    bool sigma_clamped = false; // quadrature value in [-1e-8, 0) clamped to 0
    Mat u;                      // (N+1) x m, u(t_i) = H(t_i) p(t_i)
    Mat p, z;                   // (N+1) x n each
    std::vector<Mat> kernel;    // coupled-kernel trajectories, (N+1) x 2n, z-part first
    double residual = 0.0;
};

MinimaxEstimate solve_estimator(const System& sys, const ode::VecFn& ell,
                                const Grid& grid, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// State reconstruction from an observed signal y: solve
//     p' = -A' p - H'(y - H x),    x' = A x + B B' p
// with periodic boundary conditions; x is the estimate of the observable
// state projection. Throws IncompatibleObservation when y is outside the
// admissible observation range at working tolerance.

struct StateEstimate {
    Mat p, x;                 // (N+1) x n each
    std::vector<Mat> kernel;  // coupled-kernel trajectories, (N+1) x 2n, p-part first
    double residual = 0.0;
};

StateEstimate solve_reconstruction(const System& sys, const ode::VecFn& y,
                                   const Grid& grid, const Tolerances& tol = {});

// Simpson inner product of two node-sampled signals, e.g. the functional
// value integral (l(t), x(t)) dt.
double functional_value(const Grid& grid, const Mat& a, const Mat& b);

// ---------------------------------------------------------------------------
// Observability diagnostic: Gram matrix of the observed images H psi_k of the
// periodic homogeneous solutions psi_k. Directions with H psi = 0 are
// invisible to the observations; every functional is estimable iff the Gram
// matrix has full rank (vacuously true for a trivial kernel).

struct ObservabilityReport {
    int kernel_dim = 0;
    Mat gram;                          // k x k
    Vec gram_spectrum;                 // eigenvalues, non-increasing
    int rank = 0;
    bool fully_estimable = false;
    std::vector<Mat> kernel;           // psi_k node trajectories, (N+1) x n
    std::vector<Mat> observed_kernel;  // H psi_k node trajectories, (N+1) x m
};

ObservabilityReport observability_diagnostic(const System& sys, const Grid& grid,
                                             double rank_tol = 1e-10);

// ---------------------------------------------------------------------------
// Synthetic observation generator.

struct NoiseModel {
    enum class Kind { none, deterministic, random };
    Kind kind = Kind::none;
    ode::VecFn shape;   // m components; unused when kind == none
    double scale = 1.0;
    std::uint64_t seed = 0;
};

struct Observation {
    Mat x, y, eta;                 // node samples
    double f_norm = 0.0;           // L2 norm of the input
    bool f_admissible = false;     // f_norm^2 <= 1 (advisory)
    double noise_trace = 0.0;      // trace integral of the noise law
    bool noise_admissible = false; // noise_trace <= 1 (advisory)
    bool periodic = false;         // the state BVP was compatible
    double residual = 0.0;
};

// Solves the state equation for the given input (minimum-norm representative
// plus an optional caller-supplied kernel component) and samples noisy
// observations. Admissibility of f and of the noise law is reported, not
// enforced. When no periodic state exists the call throws IncompatibleInput
// unless allow_nonperiodic is set, in which case the minimum-norm
// least-squares trajectory is used and `periodic` is false.
Observation simulate_observation(const System& sys, const ode::VecFn& f,
                                 const ode::VecFn* kernel_component,
                                 const NoiseModel& noise, const Grid& grid,
                                 const Tolerances& tol = {},
                                 bool allow_nonperiodic = false);

}  // namespace pmx::observer
