#include "pmx/bvp.hpp"

namespace pmx::bvp {

namespace {

// The monodromy of a resonant system is numerically I plus propagation noise,
// so rank decisions on I - F(w) get the natural scale of the monodromy as an
// absolute floor.
double monodromy_scale(const Mat& Fw) { return 1.0 + Fw.norm(); }

}  // namespace

PeriodicSolution solve_periodic(const ode::MatFn& M, const ode::VecFn& g, int dim,
                                const Grid& grid, double rank_tol, double solve_tol) {
    const std::vector<Mat> F = ode::propagate_fundamental(M, dim, grid);
    const Mat q = ode::propagate_affine(M, g, Vec::Zero(dim), grid);
    const Mat& Fw = F.back();
    const Mat shoot = Mat::Identity(dim, dim) - Fw;
    const Vec qw = q.row(grid.steps()).transpose();
    const double scale = monodromy_scale(Fw);

    const auto mn = linalg::solve_min_norm(shoot, qw, rank_tol, scale);
    const Mat null = linalg::nullspace_basis(shoot, rank_tol, scale);

    PeriodicSolution sol;
    sol.initial = mn.x;
    sol.residual = mn.residual;
    sol.solvable = mn.residual <= solve_tol * std::max(1.0, qw.norm());
    sol.particular.resize(grid.nodes(), dim);
    for (int i = 0; i < grid.nodes(); ++i)
        sol.particular.row(i) = (F[i] * mn.x).transpose() + q.row(i);
    sol.kernel.reserve(null.cols());
    for (Eigen::Index j = 0; j < null.cols(); ++j) {
        Mat traj(grid.nodes(), dim);
        for (int i = 0; i < grid.nodes(); ++i) traj.row(i) = (F[i] * null.col(j)).transpose();
        sol.kernel.push_back(std::move(traj));
    }
    return sol;
}

int kernel_dimension(const ode::MatFn& M, int dim, const Grid& grid, double rank_tol) {
    const std::vector<Mat> F = ode::propagate_fundamental(M, dim, grid);
    const Mat shoot = Mat::Identity(dim, dim) - F.back();
    const auto f = linalg::svd(shoot, rank_tol, monodromy_scale(F.back()));
    return dim - f.rank;
}

}  // namespace pmx::bvp
