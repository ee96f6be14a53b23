#include "pmx/observer.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace pmx::observer {

namespace {

void validate(const System& sys, const Grid& grid) {
    if (sys.n <= 0 || sys.r <= 0 || sys.m <= 0)
        throw std::invalid_argument("system dimensions must be positive");
    const double t0 = grid.node(0);
    const Mat A = sys.A(t0), B = sys.B(t0), H = sys.H(t0);
    if (A.rows() != sys.n || A.cols() != sys.n)
        throw std::invalid_argument("A must be n x n");
    if (B.rows() != sys.n || B.cols() != sys.r)
        throw std::invalid_argument("B must be n x r");
    if (H.rows() != sys.m || H.cols() != sys.n)
        throw std::invalid_argument("H must be m x n");
}

ode::MatFn adjoint_coeff(const System& sys) {
    return [A = sys.A](double t) -> Mat { return -A(t).transpose(); };
}

// Coefficient of the coupled estimator/reconstruction system
//     w' = [[-A', H'H], [BB', A]] w + forcing.
ode::MatFn coupled_coeff(const System& sys) {
    return [sys](double t) -> Mat {
        const Mat A = sys.A(t), B = sys.B(t), H = sys.H(t);
        Mat C(2 * sys.n, 2 * sys.n);
        C.topLeftCorner(sys.n, sys.n) = -A.transpose();
        C.topRightCorner(sys.n, sys.n) = H.transpose() * H;
        C.bottomLeftCorner(sys.n, sys.n) = B * B.transpose();
        C.bottomRightCorner(sys.n, sys.n) = A;
        return C;
    };
}

Mat projector_from(const Mat& Phi_w, double rank_tol) {
    const int n = static_cast<int>(Phi_w.rows());
    const Mat M = Mat::Identity(n, n) - Phi_w;
    const double scale = 1.0 + Phi_w.norm();
    return Mat::Identity(n, n) - M * linalg::pinv(M, rank_tol, scale);
}

// W plus the unprojected trace integral of Phi(w,s) H'H Phi(w,s)', which is
// the natural magnitude for rank decisions on W (W itself may be exactly 0).
struct GramianResult {
    Mat W;
    double trace_scale = 0.0;
};

GramianResult gramian(const System& sys, const Grid& grid, const Mat& P,
                      const std::vector<Mat>& Phi, const std::vector<Mat>& PhiInv) {
    const int n = sys.n;
    const Mat& Phi_w = Phi[static_cast<std::size_t>(grid.steps())];
    GramianResult out;
    out.W = Mat::Zero(n, n);
    for (int i = 0; i < grid.nodes(); ++i) {
        const Mat Phi_ws = Phi_w * PhiInv[static_cast<std::size_t>(i)];
        const Mat H = sys.H(grid.node(i));
        const Mat K = Phi_ws * H.transpose() * H * Phi_ws.transpose();
        const double w = grid.simpson_weight(i);
        out.W += w * (P * K * P);
        out.trace_scale += w * K.trace();
    }
    out.W = 0.5 * (out.W + out.W.transpose());
    return out;
}

Mat sample(const ode::VecFn& f, int dim, const Grid& grid) {
    Mat out(grid.nodes(), dim);
    for (int i = 0; i < grid.nodes(); ++i) {
        const Vec v = f(grid.node(i));
        if (v.size() != dim) throw std::invalid_argument("signal has wrong dimension");
        out.row(i) = v.transpose();
    }
    return out;
}

}  // namespace

Mat compute_P(const System& sys, const Grid& grid, double rank_tol) {
    validate(sys, grid);
    const auto Phi = ode::propagate_fundamental(adjoint_coeff(sys), sys.n, grid);
    return projector_from(Phi.back(), rank_tol);
}

Mat compute_W(const System& sys, const Grid& grid, double rank_tol) {
    validate(sys, grid);
    const auto coeff = adjoint_coeff(sys);
    const auto Phi = ode::propagate_fundamental(coeff, sys.n, grid);
    const auto PhiInv = ode::propagate_inverse_fundamental(coeff, sys.n, grid);
    const Mat P = projector_from(Phi.back(), rank_tol);
    return gramian(sys, grid, P, Phi, PhiInv).W;
}

Mat compute_h(const System& sys, const ode::VecFn& ell, const Grid& grid) {
    validate(sys, grid);
    return ode::propagate_affine(adjoint_coeff(sys), ell, Vec::Zero(sys.n), grid);
}

FeasibilityReport check_feasibility(const System& sys, const ode::VecFn& ell,
                                    const Grid& grid, const Tolerances& tol) {
    validate(sys, grid);
    const auto coeff = adjoint_coeff(sys);
    const auto Phi = ode::propagate_fundamental(coeff, sys.n, grid);
    const auto PhiInv = ode::propagate_inverse_fundamental(coeff, sys.n, grid);

    FeasibilityReport rep;
    rep.P = projector_from(Phi.back(), tol.rank_tol);
    const GramianResult gr = gramian(sys, grid, rep.P, Phi, PhiInv);
    rep.W = gr.W;
    const Mat h = ode::propagate_affine(coeff, ell, Vec::Zero(sys.n), grid);
    rep.h_end = h.row(grid.steps()).transpose();
    rep.Ph_end = rep.P * rep.h_end;
    rep.W_nullspace = linalg::nullspace_basis(rep.W, tol.rank_tol, gr.trace_scale);
    rep.defect = rep.W_nullspace.cols() > 0
                     ? (rep.W_nullspace.transpose() * rep.Ph_end).cwiseAbs().maxCoeff()
                     : 0.0;
    rep.threshold = tol.feas_tol * std::max(1.0, rep.h_end.norm());
    rep.feasible = rep.defect <= rep.threshold;
    return rep;
}

OracleVerdict feasibility_oracle(const System& sys, const ode::VecFn& ell,
                                 const Grid& grid, const Tolerances& tol) {
    validate(sys, grid);
    const auto C = coupled_coeff(sys);
    const ode::MatFn adjC = [&C](double t) -> Mat { return -C(t).transpose(); };
    const int d = 2 * sys.n;
    const auto sol = bvp::solve_periodic(
        adjC, [d](double) { return Vec::Zero(d); }, d, grid, tol.rank_tol, tol.bvp_tol);

    Mat forcing(grid.nodes(), d);
    Mat lsamp = sample(ell, sys.n, grid);
    forcing << -lsamp, Mat::Zero(grid.nodes(), sys.n);

    OracleVerdict v;
    v.adjoint_kernel_dim = static_cast<int>(sol.kernel.size());
    for (const Mat& k : sol.kernel) {
        const double norm = ode::l2_norm(grid, k);
        if (norm == 0.0) continue;
        v.defect = std::max(v.defect, std::abs(ode::l2_inner(grid, forcing, k)) / norm);
    }
    v.threshold = tol.feas_tol * std::max(1.0, ode::l2_norm(grid, lsamp));
    v.feasible = v.defect <= v.threshold;
    return v;
}

MinimaxEstimate solve_estimator(const System& sys, const ode::VecFn& ell,
                                const Grid& grid, const Tolerances& tol) {
    validate(sys, grid);
    const int n = sys.n;
    const ode::VecFn forcing = [ell, n](double t) -> Vec {
        Vec g = Vec::Zero(2 * n);
        g.head(n) = -ell(t);
        return g;
    };
    const auto sol =
        bvp::solve_periodic(coupled_coeff(sys), forcing, 2 * n, grid, tol.rank_tol, tol.bvp_tol);

    MinimaxEstimate est;
    est.kernel = sol.kernel;
    est.residual = sol.residual;
    if (!sol.solvable) {
        est.finite = false;
        est.sigma = std::numeric_limits<double>::infinity();
        return est;
    }
    est.finite = true;
    est.z = sol.particular.leftCols(n);
    est.p = sol.particular.rightCols(n);
    est.u.resize(grid.nodes(), sys.m);
    for (int i = 0; i < grid.nodes(); ++i)
        est.u.row(i) = (sys.H(grid.node(i)) * est.p.row(i).transpose()).transpose();
    const Mat lsamp = sample(ell, n, grid);
    est.sigma = ode::l2_inner(grid, lsamp, est.p);
    if (est.sigma < 0.0) {
        if (est.sigma < -1e-8)
            throw NumericalError("guaranteed error evaluated to " + std::to_string(est.sigma) +
                                 "; the coupled solve is inconsistent");
        est.sigma = 0.0;
        est.sigma_clamped = true;
    }
    return est;
}

StateEstimate solve_reconstruction(const System& sys, const ode::VecFn& y,
                                   const Grid& grid, const Tolerances& tol) {
    validate(sys, grid);
    const int n = sys.n;
    const ode::VecFn forcing = [&sys, y, n](double t) -> Vec {
        Vec g = Vec::Zero(2 * n);
        g.head(n) = -sys.H(t).transpose() * y(t);
        return g;
    };
    const auto sol =
        bvp::solve_periodic(coupled_coeff(sys), forcing, 2 * n, grid, tol.rank_tol, tol.bvp_tol);
    if (!sol.solvable)
        throw IncompatibleObservation(
            "observed signal is incompatible with the model (shooting residual " +
            std::to_string(sol.residual) + ")");
    StateEstimate est;
    est.p = sol.particular.leftCols(n);
    est.x = sol.particular.rightCols(n);
    est.kernel = sol.kernel;
    est.residual = sol.residual;
    return est;
}

double functional_value(const Grid& grid, const Mat& a, const Mat& b) {
    return ode::l2_inner(grid, a, b);
}

ObservabilityReport observability_diagnostic(const System& sys, const Grid& grid,
                                             double rank_tol) {
    validate(sys, grid);
    const auto sol = bvp::solve_periodic(
        sys.A, [n = sys.n](double) { return Vec::Zero(n); }, sys.n, grid, rank_tol, 1e-6);

    ObservabilityReport rep;
    rep.kernel_dim = static_cast<int>(sol.kernel.size());
    rep.kernel = sol.kernel;
    for (const Mat& psi : sol.kernel) {
        Mat obs(grid.nodes(), sys.m);
        for (int i = 0; i < grid.nodes(); ++i)
            obs.row(i) = (sys.H(grid.node(i)) * psi.row(i).transpose()).transpose();
        rep.observed_kernel.push_back(std::move(obs));
    }
    rep.gram.resize(rep.kernel_dim, rep.kernel_dim);
    for (int j = 0; j < rep.kernel_dim; ++j)
        for (int k = j; k < rep.kernel_dim; ++k) {
            rep.gram(j, k) = ode::l2_inner(grid, rep.observed_kernel[j], rep.observed_kernel[k]);
            rep.gram(k, j) = rep.gram(j, k);
        }
    if (rep.kernel_dim > 0) {
        const auto f = linalg::svd(rep.gram, rank_tol, std::max(1.0, rep.gram.trace()));
        rep.gram_spectrum = f.sigma;
        rep.rank = f.rank;
    } else {
        rep.gram_spectrum = Vec();
        rep.rank = 0;
    }
    rep.fully_estimable = rep.rank == rep.kernel_dim;
    return rep;
}

Observation simulate_observation(const System& sys, const ode::VecFn& f,
                                 const ode::VecFn* kernel_component,
                                 const NoiseModel& noise, const Grid& grid,
                                 const Tolerances& tol, bool allow_nonperiodic) {
    validate(sys, grid);
    const ode::VecFn forcing = [&sys, f](double t) -> Vec { return sys.B(t) * f(t); };
    const auto sol = bvp::solve_periodic(sys.A, forcing, sys.n, grid, tol.rank_tol, tol.bvp_tol);
    if (!sol.solvable && !allow_nonperiodic)
        throw IncompatibleInput(
            "no periodic state trajectory exists for the supplied input (shooting residual " +
            std::to_string(sol.residual) + ")");

    Observation obs;
    obs.periodic = sol.solvable;
    obs.residual = sol.residual;
    obs.x = sol.particular;
    if (kernel_component) obs.x += sample(*kernel_component, sys.n, grid);

    const Mat fsamp = sample(f, sys.r, grid);
    obs.f_norm = ode::l2_norm(grid, fsamp);
    obs.f_admissible = obs.f_norm * obs.f_norm <= 1.0 + 1e-9;

    obs.eta = Mat::Zero(grid.nodes(), sys.m);
    if (noise.kind != NoiseModel::Kind::none) {
        const Mat shape = sample(noise.shape, sys.m, grid);
        obs.noise_trace = noise.scale * noise.scale * ode::l2_inner(grid, shape, shape);
        if (noise.kind == NoiseModel::Kind::deterministic) {
            obs.eta = noise.scale * shape;
        } else {
            // Amplitude-modulated white noise: one standard normal per node
            // and channel. The law's trace integral equals the deterministic
            // one, which keeps admissibility independent of the grid.
            std::mt19937_64 gen(noise.seed);
            std::normal_distribution<double> normal;
            for (int i = 0; i < grid.nodes(); ++i)
                for (int c = 0; c < sys.m; ++c)
                    obs.eta(i, c) = noise.scale * shape(i, c) * normal(gen);
        }
    }
    obs.noise_admissible = obs.noise_trace <= 1.0 + 1e-9;

    obs.y.resize(grid.nodes(), sys.m);
    for (int i = 0; i < grid.nodes(); ++i)
        obs.y.row(i) =
            (sys.H(grid.node(i)) * obs.x.row(i).transpose()).transpose() + obs.eta.row(i);
    return obs;
}

}  // namespace pmx::observer
