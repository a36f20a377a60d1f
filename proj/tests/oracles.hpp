#pragma once
// Independent reference computations used only by tests.

#include "cpo/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

namespace oracle {

using cpo::Index;
using cpo::Matrix;
using cpo::Points;
using cpo::Vector;

/// Area of the union of two discs of radius r whose centers are d apart.
inline double two_disc_union_area(double r, double d) {
    const double disc = std::numbers::pi * r * r;
    if (d >= 2 * r)
        return 2 * disc;
    const double lens = 2 * r * r * std::acos(d / (2 * r)) - 0.5 * d * std::sqrt(4 * r * r - d * d);
    return 2 * disc - lens;
}

/// Component labels by breadth-first search over all pairs with distance < r.
inline std::vector<Index> brute_components(const Points& pts, double r) {
    const Index n = pts.cols();
    std::vector<Index> label(static_cast<std::size_t>(n), -1);
    Index next = 0;
    for (Index s = 0; s < n; ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0)
            continue;
        std::queue<Index> q;
        q.push(s);
        label[static_cast<std::size_t>(s)] = next;
        while (!q.empty()) {
            const Index u = q.front();
            q.pop();
            for (Index v = 0; v < n; ++v)
                if (label[static_cast<std::size_t>(v)] < 0 && (pts.col(u) - pts.col(v)).norm() < r) {
                    label[static_cast<std::size_t>(v)] = next;
                    q.push(v);
                }
        }
        ++next;
    }
    return label;
}

/// Dense two-phase simplex (Bland's rule) for min c^T x, A x = b, x >= 0.
/// Returns nullopt when infeasible.
inline std::optional<double> simplex_min(Matrix a, Vector b, const Vector& c) {
    const Index m = a.rows(), n = a.cols();
    for (Index i = 0; i < m; ++i)
        if (b[i] < 0) {
            a.row(i) *= -1;
            b[i] *= -1;
        }
    // Tableau with artificials: columns [x (n) | art (m) | rhs].
    Matrix t = Matrix::Zero(m + 1, n + m + 1);
    t.block(0, 0, m, n) = a;
    t.block(0, n, m, m) = Matrix::Identity(m, m);
    t.col(n + m).head(m) = b;
    std::vector<Index> basis(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i)
        basis[static_cast<std::size_t>(i)] = n + i;
    const double eps = 1e-10;

    auto pivot = [&](Index row, Index col) {
        t.row(row) /= t(row, col);
        for (Index i = 0; i <= m; ++i)
            if (i != row && std::abs(t(i, col)) > 0)
                t.row(i) -= t(i, col) * t.row(row);
        basis[static_cast<std::size_t>(row)] = col;
    };
    auto run = [&](Index usable) {
        for (int guard = 0; guard < 100000; ++guard) {
            Index enter = -1;
            for (Index j = 0; j < usable; ++j)
                if (t(m, j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0)
                return true;
            Index leave = -1;
            double best = 0;
            for (Index i = 0; i < m; ++i)
                if (t(i, enter) > eps) {
                    const double ratio = t(i, n + m) / t(i, enter);
                    if (leave < 0 || ratio < best - 1e-12 ||
                        (std::abs(ratio - best) <= 1e-12 && basis[static_cast<std::size_t>(i)] <
                                                                basis[static_cast<std::size_t>(leave)])) {
                        leave = i;
                        best = ratio;
                    }
                }
            if (leave < 0)
                return false; // unbounded
            pivot(leave, enter);
        }
        return false;
    };

    // Phase 1: minimize the sum of artificials.
    t.row(m).setZero();
    for (Index i = 0; i < m; ++i)
        t.row(m) -= t.row(i);
    for (Index i = 0; i < m; ++i)
        t(m, n + i) = 0;
    run(n + m);
    if (-t(m, n + m) > 1e-7)
        return std::nullopt;
    // Drive remaining artificials out of the basis where possible.
    for (Index i = 0; i < m; ++i)
        if (basis[static_cast<std::size_t>(i)] >= n)
            for (Index j = 0; j < n; ++j)
                if (std::abs(t(i, j)) > eps) {
                    pivot(i, j);
                    break;
                }
    // Phase 2 with artificial columns frozen.
    t.row(m).setZero();
    t.row(m).head(n) = c.transpose();
    for (Index i = 0; i < m; ++i) {
        const Index bcol = basis[static_cast<std::size_t>(i)];
        if (bcol < n)
            t.row(m) -= c[bcol] * t.row(i);
    }
    if (!run(n))
        return std::nullopt;
    return -t(m, n + m);
}

/// min c^T w subject to A w = b, 0 <= w <= 1, via slack columns.
inline std::optional<double> box_lp_min(const Matrix& a, const Vector& b, const Vector& c) {
    const Index m = a.rows(), n = a.cols();
    Matrix big = Matrix::Zero(m + n, 2 * n);
    big.block(0, 0, m, n) = a;
    big.block(m, 0, n, n) = Matrix::Identity(n, n);
    big.block(m, n, n, n) = Matrix::Identity(n, n);
    Vector rhs(m + n);
    rhs << b, Vector::Ones(n);
    Vector cost = Vector::Zero(2 * n);
    cost.head(n) = c;
    return simplex_min(big, rhs, cost);
}

/// Minimum over a 1-D grid with the given step.
template <typename F>
double grid_min(F f, double lo, double hi, double step) {
    double best = f(lo);
    const auto n = static_cast<long>(std::ceil((hi - lo) / step));
    for (long i = 1; i <= n; ++i)
        best = std::min(best, f(std::min(hi, lo + static_cast<double>(i) * step)));
    return best;
}

/// Min of a convex f over {w in [0,1]^2 : feasible(w)}: a coarse grid, then a
/// fine grid around the coarse winner. Corners of the coarse grid are always tried.
template <class F, class Feasible>
double grid_min_2d(F f, Feasible feasible, double coarse = 1e-2, double fine = 5e-4) {
    double best = 1e300, bx = 0, by = 0;
    const auto scan = [&](double x0, double x1, double y0, double y1, double step) {
        const auto nx = static_cast<long>(std::ceil((x1 - x0) / step));
        const auto ny = static_cast<long>(std::ceil((y1 - y0) / step));
        for (long i = 0; i <= nx; ++i)
            for (long j = 0; j <= ny; ++j) {
                Vector w(2);
                w << std::min(x1, x0 + static_cast<double>(i) * step), std::min(y1, y0 + static_cast<double>(j) * step);
                if (!feasible(w))
                    continue;
                const double v = f(w);
                if (v < best) {
                    best = v;
                    bx = w[0];
                    by = w[1];
                }
            }
    };
    scan(0, 1, 0, 1, coarse);
    const double r = 2 * coarse;
    scan(std::max(0.0, bx - r), std::min(1.0, bx + r), std::max(0.0, by - r), std::min(1.0, by + r), fine);
    return best;
}

/// mean over samples of [min_j d(c, cand_j) - min_j d(c, ref_j)] by double loop.
inline double suboptimality_double_loop(const Points& cand, const Points& ref, const Points& samples) {
    double total = 0;
    for (Index i = 0; i < samples.cols(); ++i) {
        double dc = 1e300, dr = 1e300;
        for (Index j = 0; j < cand.cols(); ++j)
            dc = std::min(dc, (samples.col(i) - cand.col(j)).norm());
        for (Index j = 0; j < ref.cols(); ++j)
            dr = std::min(dr, (samples.col(i) - ref.col(j)).norm());
        total += dc - dr;
    }
    return total / static_cast<double>(samples.cols());
}

} // namespace oracle
