#include "support.hpp"

#include <cmath>
#include <memory>

#include "pmx/linalg.hpp"

namespace testsupport {

pmx::ode::MatFn const_mat(const Mat& M) {
    return [M](double) { return M; };
}

pmx::ode::VecFn zero_vec(int d) {
    return [d](double) { return Vec(Vec::Zero(d)); };
}

pmx::ode::MatFn adjoint_coeff(const pmx::observer::System& sys) {
    return [A = sys.A](double t) { return Mat(-A(t).transpose()); };
}

pmx::ode::MatFn coupled_coeff(const pmx::observer::System& sys) {
    return [sys](double t) {
        const Mat A = sys.A(t);
        const Mat B = sys.B(t);
        const Mat H = sys.H(t);
        Mat C(2 * sys.n, 2 * sys.n);
        C.topLeftCorner(sys.n, sys.n) = -A.transpose();
        C.topRightCorner(sys.n, sys.n) = H.transpose() * H;
        C.bottomLeftCorner(sys.n, sys.n) = B * B.transpose();
        C.bottomRightCorner(sys.n, sys.n) = A;
        return C;
    };
}

Case make_case(int idx, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randn = [&](int rows, int cols) {
        Mat M(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
        return M;
    };
    auto randint = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    Case c;
    c.kind = idx % 4;
    int n = 0;
    switch (c.kind) {
        case 0:
            n = randint(1, 3);
            c.A = 0.4 * randn(n, n) - 0.6 * Mat::Identity(n, n);
            break;
        case 1:
            n = randint(2, 3);
            c.A = 0.3 * randn(n, n) - 0.6 * Mat::Identity(n, n);
            c.A.row(0).setZero();
            c.A.col(0).setZero();
            break;
        case 2:
            n = 2;
            c.A.resize(2, 2);
            c.A << 0, -1, 1, 0;
            break;
        default:
            n = 2;
            c.A.resize(2, 2);
            c.A << 1, 0, 1, 0;
            break;
    }
    int m = randint(1, 2);
    c.H = randn(m, n);
    if (c.kind == 1) c.H.col(0).setZero();
    if (c.kind == 3) {
        Mat full(2, 2);
        full << 1, 0, 0, 0;
        c.H = full.topRows(m);
    }
    c.B = Mat::Identity(n, n);
    c.sys.n = n;
    c.sys.r = n;
    c.sys.m = m;
    c.sys.A = const_mat(c.A);
    c.sys.B = const_mat(c.B);
    c.sys.H = const_mat(c.H);
    return c;
}

Mat sample(const pmx::ode::VecFn& f, int d, const Grid& grid) {
    Mat out(grid.nodes(), d);
    for (int i = 0; i <= grid.steps(); ++i) out.row(i) = f(grid.node(i)).transpose();
    return out;
}

pmx::ode::VecFn interp_fn(Mat vals, const Grid& grid) {
    auto shared = std::make_shared<Mat>(std::move(vals));
    double h = grid.step();
    int N = grid.steps();
    return [shared, h, N](double t) {
        double u = t / h;
        int i = static_cast<int>(std::floor(u));
        if (i < 0) i = 0;
        if (i >= N) i = N - 1;
        double w = u - i;
        return Vec((1.0 - w) * shared->row(i).transpose() +
                   w * shared->row(i + 1).transpose());
    };
}

Mat random_trig_samples(int n, const Grid& grid, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat coeff(n, 3);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < 3; ++k) coeff(j, k) = gauss(rng);
    Mat out(grid.nodes(), n);
    for (int i = 0; i <= grid.steps(); ++i) {
        double t = grid.node(i);
        for (int j = 0; j < n; ++j)
            out(i, j) = coeff(j, 0) + coeff(j, 1) * std::cos(t) + coeff(j, 2) * std::sin(t);
    }
    return out;
}

std::vector<Mat> periodic_kernel(const pmx::ode::MatFn& M, int dim, const Grid& grid,
                                 double rank_tol) {
    return pmx::bvp::solve_periodic(M, zero_vec(dim), dim, grid, rank_tol).kernel;
}

Mat project_feasible(const pmx::observer::System& sys, const Mat& ellv, const Grid& grid,
                     double rank_tol) {
    const int n = sys.n;
    auto kernel = periodic_kernel(coupled_coeff(sys), 2 * n, grid, rank_tol);
    const int k = static_cast<int>(kernel.size());
    if (k == 0) return ellv;
    std::vector<Mat> p_parts;
    p_parts.reserve(k);
    for (const Mat& traj : kernel) p_parts.push_back(traj.rightCols(n));
    Mat gram(k, k);
    Vec rhs(k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j)
            gram(i, j) = pmx::ode::l2_inner(grid, p_parts[i], p_parts[j]);
        rhs[i] = pmx::ode::l2_inner(grid, ellv, p_parts[i]);
    }
    Vec co = pmx::linalg::pinv(gram, 1e-10) * rhs;
    Mat out = ellv;
    for (int j = 0; j < k; ++j) out -= co[j] * p_parts[j];
    return out;
}

FdSolution fd_periodic(const pmx::ode::MatFn& C, const pmx::ode::VecFn& g, int dim,
                       const Grid& grid) {
    const int N = grid.steps();
    const int d = dim;
    const double h = grid.step();
    Mat sys = Mat::Zero(N * d, N * d);
    Vec rhs(N * d);
    const Mat eye_h = Mat::Identity(d, d) / h;
    for (int i = 0; i < N; ++i) {
        const double tm = grid.mid(i);
        const Mat Cm = C(tm);
        const int next = (i + 1) % N;
        sys.block(i * d, i * d, d, d) += -eye_h - 0.5 * Cm;
        sys.block(i * d, next * d, d, d) += eye_h - 0.5 * Cm;
        rhs.segment(i * d, d) = g(tm);
    }
    auto sol = pmx::linalg::solve_min_norm(sys, rhs, 1e-10);
    FdSolution out;
    out.residual = sol.residual;
    out.traj.resize(N + 1, d);
    for (int i = 0; i < N; ++i) out.traj.row(i) = sol.x.segment(i * d, d).transpose();
    out.traj.row(N) = out.traj.row(0);
    return out;
}

}  // namespace testsupport
