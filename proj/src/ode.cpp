#include "pmx/ode.hpp"

#include <cmath>

namespace pmx {

Grid::Grid(double omega, int steps) : omega_(omega), steps_(steps) {
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw std::invalid_argument("Grid: omega must be positive and finite");
    if (steps < 2 || steps % 2 != 0)
        throw std::invalid_argument("Grid: steps must be a positive even integer");
}

double Grid::simpson_weight(int i) const {
    const double h3 = step() / 3.0;
    if (i == 0 || i == steps_) return h3;
    return (i % 2 == 1) ? 4.0 * h3 : 2.0 * h3;
}

namespace ode {

namespace {

constexpr double kDivergenceLimit = 1e300;

void check_bounded(const Mat& X, int at_step) {
    if (!(X.cwiseAbs().maxCoeff() < kDivergenceLimit) || !X.allFinite())
        throw DivergenceError("trajectory diverged at step " + std::to_string(at_step));
}

}  // namespace

std::vector<Mat> propagate_fundamental(const MatFn& M, int dim, const Grid& grid) {
    const double h = grid.step();
    std::vector<Mat> out;
    out.reserve(grid.nodes());
    Mat X = Mat::Identity(dim, dim);
    out.push_back(X);
    for (int i = 0; i < grid.steps(); ++i) {
        const Mat M0 = M(grid.node(i));
        const Mat Mm = M(grid.mid(i));
        const Mat M1 = M(grid.node(i + 1));
        const Mat k1 = M0 * X;
        const Mat k2 = Mm * (X + (h / 2) * k1);
        const Mat k3 = Mm * (X + (h / 2) * k2);
        const Mat k4 = M1 * (X + h * k3);
        X += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        check_bounded(X, i + 1);
        out.push_back(X);
    }
    return out;
}

std::vector<Mat> propagate_inverse_fundamental(const MatFn& M, int dim, const Grid& grid) {
    const double h = grid.step();
    std::vector<Mat> out;
    out.reserve(grid.nodes());
    Mat Y = Mat::Identity(dim, dim);
    out.push_back(Y);
    for (int i = 0; i < grid.steps(); ++i) {
        const Mat M0 = M(grid.node(i));
        const Mat Mm = M(grid.mid(i));
        const Mat M1 = M(grid.node(i + 1));
        const Mat k1 = -Y * M0;
        const Mat k2 = -(Y + (h / 2) * k1) * Mm;
        const Mat k3 = -(Y + (h / 2) * k2) * Mm;
        const Mat k4 = -(Y + h * k3) * M1;
        Y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        check_bounded(Y, i + 1);
        out.push_back(Y);
    }
    return out;
}

Mat propagate_affine(const MatFn& M, const VecFn& g, const Vec& x0, const Grid& grid) {
    const double h = grid.step();
    const int d = static_cast<int>(x0.size());
    Mat out(grid.nodes(), d);
    Vec x = x0;
    out.row(0) = x.transpose();
    for (int i = 0; i < grid.steps(); ++i) {
        const double t0 = grid.node(i), tm = grid.mid(i), t1 = grid.node(i + 1);
        const Mat M0 = M(t0), Mm = M(tm), M1 = M(t1);
        const Vec g0 = g(t0), gm = g(tm), g1 = g(t1);
        const Vec k1 = M0 * x + g0;
        const Vec k2 = Mm * (x + (h / 2) * k1) + gm;
        const Vec k3 = Mm * (x + (h / 2) * k2) + gm;
        const Vec k4 = M1 * (x + h * k3) + g1;
        x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        check_bounded(x, i + 1);
        out.row(i + 1) = x.transpose();
    }
    return out;
}

double simpson(const Grid& grid, const std::vector<double>& samples) {
    if (samples.size() != static_cast<std::size_t>(grid.nodes()))
        throw std::invalid_argument("simpson: sample count must be N+1");
    double acc = 0.0;
    for (int i = 0; i < grid.nodes(); ++i) acc += grid.simpson_weight(i) * samples[i];
    return acc;
}

double l2_inner(const Grid& grid, const Mat& a, const Mat& b) {
    if (a.rows() != grid.nodes() || b.rows() != grid.nodes() || a.cols() != b.cols())
        throw std::invalid_argument("l2_inner: shape mismatch");
    double acc = 0.0;
    for (int i = 0; i < grid.nodes(); ++i)
        acc += grid.simpson_weight(i) * a.row(i).dot(b.row(i));
    return acc;
}

double l2_norm(const Grid& grid, const Mat& a) { return std::sqrt(std::max(0.0, l2_inner(grid, a, a))); }

}  // namespace ode
}  // namespace pmx
