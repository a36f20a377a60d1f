#include "cpo/robust_opt.hpp"

#include "cpo/errors.hpp"
#include "cpo/geometry.hpp"
#include "cpo/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpo {

// ---------------------------------------------------------------------------
// Objective

Objective Objective::linear(double lipschitz_c) {
    Objective o;
    o.kind = ObjectiveKind::Linear;
    o.lipschitz_c = lipschitz_c;
    return o;
}

Objective Objective::linear_neg(double lipschitz_c) {
    Objective o;
    o.kind = ObjectiveKind::LinearNeg;
    o.lipschitz_c = lipschitz_c;
    return o;
}

Objective Objective::general(std::function<double(const Vector&, const Vector&)> value,
                             std::function<Vector(const Vector&, const Vector&)> grad_w,
                             std::function<Vector(const Vector&, const Vector&)> grad_c, double lipschitz_c,
                             double lipschitz_w) {
    if (!value || !grad_w || !grad_c)
        throw InvalidArgument("Objective::general: value and both gradients are required");
    Objective o;
    o.kind = ObjectiveKind::General;
    o.lipschitz_c = lipschitz_c;
    o.lipschitz_w = lipschitz_w;
    o.value_fn = std::move(value);
    o.grad_w_fn = std::move(grad_w);
    o.grad_c_fn = std::move(grad_c);
    return o;
}

double Objective::value(const Vector& w, const Vector& c) const {
    switch (kind) {
    case ObjectiveKind::Linear:
        return c.dot(w);
    case ObjectiveKind::LinearNeg:
        return -c.dot(w);
    case ObjectiveKind::General:
        break;
    }
    return value_fn(w, c);
}

Vector Objective::grad_w(const Vector& w, const Vector& c) const {
    switch (kind) {
    case ObjectiveKind::Linear:
        return c;
    case ObjectiveKind::LinearNeg:
        return -c;
    case ObjectiveKind::General:
        break;
    }
    return grad_w_fn(w, c);
}

Vector Objective::grad_c(const Vector& w, const Vector& c) const {
    switch (kind) {
    case ObjectiveKind::Linear:
        return w;
    case ObjectiveKind::LinearNeg:
        return -w;
    case ObjectiveKind::General:
        break;
    }
    return grad_c_fn(w, c);
}

// ---------------------------------------------------------------------------
// Feasible sets

FeasibleSet FeasibleSet::box01(Index n) {
    if (n < 1)
        throw InvalidArgument("box01: dimension must be positive");
    FeasibleSet s;
    s.kind_ = FeasibleKind::Box01;
    s.dim_ = n;
    return s;
}

FeasibleSet FeasibleSet::box_budget(Vector weights, double budget) {
    if (weights.size() < 1)
        throw InvalidArgument("box_budget: dimension must be positive");
    if ((weights.array() < 0).any())
        throw InvalidArgument("box_budget: weights must be nonnegative");
    if (!(budget >= 0))
        throw Infeasible("box_budget: budget must be nonnegative");
    FeasibleSet s;
    s.kind_ = FeasibleKind::BoxBudget;
    s.dim_ = weights.size();
    s.weights_ = std::move(weights);
    s.budget_ = budget;
    return s;
}

FeasibleSet FeasibleSet::affine_box(Eigen::SparseMatrix<double> a, Vector b, DykstraOptions options) {
    if (a.rows() != b.size())
        throw InvalidArgument("affine_box: A and b disagree in row count");
    if (a.cols() < 1)
        throw InvalidArgument("affine_box: no variables");
    FeasibleSet s;
    s.kind_ = FeasibleKind::AffineBox;
    s.dim_ = a.cols();
    s.dykstra_ = options;
    const Matrix dense_a(a);
    s.normal_ = std::make_shared<const Eigen::CompleteOrthogonalDecomposition<Matrix>>(dense_a * dense_a.transpose());
    s.a_ = std::move(a);
    s.b_ = std::move(b);

    Vector start = Vector::Constant(s.dim_, 0.5);
    Vector w;
    try {
        w = s.dykstra(start);
    } catch (const NumericFailure& e) {
        throw Infeasible(std::string("affine_box: phase-1 found no feasible point: ") + e.what());
    }
    if (!s.contains(w, 1e-6))
        throw Infeasible("affine_box: phase-1 found no feasible point (residual " +
                         std::to_string(s.flow_residual(w)) + ")");
    return s;
}

Vector FeasibleSet::project_budget(const Vector& w) const {
    Vector v = w.cwiseMax(0.0).cwiseMin(1.0);
    if (weights_.dot(v) <= budget_)
        return v;
    // p^T clamp(w - lambda p) is nonincreasing in lambda; bisect for the
    // multiplier that makes the budget tight.
    double lo = 0.0;
    double hi = 0.0;
    for (Index i = 0; i < dim_; ++i)
        if (weights_[i] > 0)
            hi = std::max(hi, w[i] / weights_[i]);
    auto at = [&](double lambda) { return (w - lambda * weights_).cwiseMax(0.0).cwiseMin(1.0).eval(); };
    const double tol = 1e-10 * std::max(1.0, budget_);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double load = weights_.dot(at(mid));
        if (std::abs(load - budget_) <= tol)
            return at(mid);
        (load > budget_ ? lo : hi) = mid;
    }
    return at(hi);
}

Vector FeasibleSet::project_affine(const Vector& w) const {
    const Vector residual = a_ * w - b_;
    const Vector y = normal_->solve(residual);
    return w - a_.transpose() * y;
}

Vector FeasibleSet::dykstra(const Vector& w) const {
    Vector x = w;
    Vector p = Vector::Zero(dim_);
    Vector q = Vector::Zero(dim_);
    for (Index it = 0; it < dykstra_.max_iterations; ++it) {
        const Vector y = project_affine(x + p);
        p = x + p - y;
        const Vector next = (y + q).cwiseMax(0.0).cwiseMin(1.0);
        q = y + q - next;
        const double move = (next - x).norm();
        x = next;
        if (move < dykstra_.tolerance)
            return x;
    }
    std::ostringstream msg;
    msg << "dykstra projection hit the iteration cap (" << dykstra_.max_iterations << "), flow residual "
        << flow_residual(x);
    throw NumericFailure(msg.str());
}

Vector FeasibleSet::project(const Vector& w) const {
    if (w.size() != dim_)
        throw InvalidArgument("project: dimension mismatch");
    switch (kind_) {
    case FeasibleKind::Box01:
        return w.cwiseMax(0.0).cwiseMin(1.0);
    case FeasibleKind::BoxBudget:
        return project_budget(w);
    case FeasibleKind::AffineBox:
        return dykstra(w);
    }
    return w;
}

bool FeasibleSet::contains(const Vector& w, double tol) const {
    if (w.size() != dim_)
        return false;
    if ((w.array() < -tol).any() || (w.array() > 1.0 + tol).any())
        return false;
    if (kind_ == FeasibleKind::BoxBudget && weights_.dot(w) > budget_ + tol * std::max(1.0, budget_))
        return false;
    if (kind_ == FeasibleKind::AffineBox && flow_residual(w) > tol)
        return false;
    return true;
}

double FeasibleSet::diameter() const { return std::sqrt(static_cast<double>(dim_)); }

double FeasibleSet::max_norm() const { return std::sqrt(static_cast<double>(dim_)); }

Vector FeasibleSet::sample_initial(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&] {
        Vector w(dim_);
        for (Index i = 0; i < dim_; ++i)
            w[i] = unit(rng);
        return w;
    };
    switch (kind_) {
    case FeasibleKind::Box01:
        return draw();
    case FeasibleKind::BoxBudget:
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Vector w = draw();
            if (weights_.dot(w) <= budget_)
                return w;
        }
        return project_budget(draw());
    case FeasibleKind::AffineBox:
        return dykstra(draw());
    }
    return draw();
}

double FeasibleSet::flow_residual(const Vector& w) const {
    if (kind_ != FeasibleKind::AffineBox)
        return 0.0;
    return (a_ * w - b_).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Inner maximization

InnerMax inner_max_ball(const Objective& obj, const Vector& w, const Vector& center, double radius,
                        const AscentOptions& ascent) {
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    if (radius < 0)
        throw InvalidArgument("inner_max_ball: negative radius");
    if (obj.is_linear()) {
        const Vector g = obj.grad_c(w, center);
        const double gn = g.norm();
        InnerMax out{center, obj.value(w, center), 0};
        if (gn > 0 && radius > 0) {
            out.c_star = center + (radius / gn) * g;
            out.value += radius * gn;
        }
        return out;
    }

    auto project_ball = [&](const Vector& c) {
        const Vector d = c - center;
        const double n = d.norm();
        return n > radius ? Vector(center + (radius / n) * d) : c;
    };
    Vector c = center;
    double value = obj.value(w, c);
    if (radius == 0)
        return {c, value, 0};
    double step = std::max(radius, 1e-12);
    for (Index it = 0; it < ascent.max_iterations; ++it) {
        const Vector g = obj.grad_c(w, c);
        if (g.norm() == 0)
            break;
        const Vector next = project_ball(c + step * g);
        const double next_value = obj.value(w, next);
        if (next_value < value) {
            step *= 0.5;
            if (step < 1e-14 * std::max(1.0, radius))
                break;
            continue;
        }
        const double gain = next_value - value;
        c = next;
        value = next_value;
        if (gain <= ascent.tolerance * std::max(1.0, std::abs(value)))
            break;
        step *= 1.5;
    }
    return {c, value, 0};
}

InnerMax inner_max_union(const Objective& obj, const Vector& w, const Points& centers, double radius,
                         const AscentOptions& ascent) {
    if (centers.cols() == 0)
        throw InvalidArgument("inner_max_union: empty center list");
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    InnerMax best = inner_max_ball(obj, w, centers.col(0), radius, ascent);
    for (Index k = 1; k < centers.cols(); ++k) {
        InnerMax cand = inner_max_ball(obj, w, centers.col(k), radius, ascent);
        if (cand.value > best.value) {
            best = std::move(cand);
            best.ball = k;
        }
    }
    return best;
}

InnerMax inner_max_box(const Objective& obj, const Vector& w, const Vector& center, const Vector& scales,
                       double radius) {
    if (!obj.is_linear())
        throw InvalidArgument("inner_max_box: linear objectives only");
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    const Vector g = obj.grad_c(w, center);
    const Vector sign = g.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    return {center + radius * scales.cwiseProduct(sign),
            obj.value(w, center) + radius * scales.cwiseProduct(g.cwiseAbs()).sum(), 0};
}

InnerMax inner_max_ellipsoid(const Objective& obj, const Vector& w, const Vector& center, const Matrix& shape,
                             double radius) {
    if (!obj.is_linear())
        throw InvalidArgument("inner_max_ellipsoid: linear objectives only");
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    const Vector g = obj.grad_c(w, center);
    const Vector sg = shape * g;
    const double spread = std::sqrt(std::max(0.0, g.dot(sg)));
    InnerMax out{center, obj.value(w, center), 0};
    if (spread > 0 && radius > 0) {
        out.c_star = center + (radius / spread) * sg;
        out.value += radius * spread;
    }
    return out;
}

InnerMax inner_max(const Objective& obj, const Vector& w, const UncertaintySet& set, const AscentOptions& ascent) {
    return std::visit(
        [&](const auto& s) -> InnerMax {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BallUnion>)
                return inner_max_union(obj, w, s.centers, s.radius, ascent);
            else if constexpr (std::is_same_v<T, BoxSet>)
                return inner_max_box(obj, w, s.center, s.scales, s.radius);
            else
                return inner_max_ellipsoid(obj, w, s.center, s.shape, s.radius);
        },
        set);
}

UncertaintySet region_set(const CalibratedRegion& region, const Vector& x) {
    if (!region.bounded())
        throw UnboundedRegion();
    if (const auto* gpcp = std::get_if<GpcpScore>(&region.score))
        return BallUnion{gpcp->centers(x), region.q_hat};
    const auto& base = std::get<BaselineScore>(region.score);
    BaselineGeometry g = base.geometry(x);
    if (base.kind() == ScoreKind::Box || base.kind() == ScoreKind::PtcBox)
        return BoxSet{std::move(g.center), std::move(g.scales), region.q_hat};
    return EllipsoidSet{std::move(g.center), std::move(g.shape), region.q_hat};
}

double set_diameter(const UncertaintySet& set) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BallUnion>) {
                double widest = 0;
                for (Index i = 0; i < s.centers.cols(); ++i)
                    for (Index j = i + 1; j < s.centers.cols(); ++j)
                        widest = std::max(widest, (s.centers.col(i) - s.centers.col(j)).norm());
                return widest + 2.0 * s.radius;
            } else if constexpr (std::is_same_v<T, BoxSet>) {
                return 2.0 * s.radius * s.scales.norm();
            } else {
                Eigen::SelfAdjointEigenSolver<Matrix> eig(s.shape, Eigen::EigenvaluesOnly);
                return 2.0 * s.radius * std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
            }
        },
        set);
}

double set_max_norm(const UncertaintySet& set) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BallUnion>) {
                return s.centers.colwise().norm().maxCoeff() + s.radius;
            } else if constexpr (std::is_same_v<T, BoxSet>) {
                return (s.center.cwiseAbs() + s.radius * s.scales).norm();
            } else {
                Eigen::SelfAdjointEigenSolver<Matrix> eig(s.shape, Eigen::EigenvaluesOnly);
                return s.center.norm() + s.radius * std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
            }
        },
        set);
}

// ---------------------------------------------------------------------------
// Solver

namespace {

double subgradient_bound(const Objective& obj, const UncertaintySet& set) {
    if (obj.lipschitz_w > 0)
        return obj.lipschitz_w;
    if (obj.is_linear())
        return set_max_norm(set);
    return obj.lipschitz_c;
}

} // namespace

double auto_step(const Objective& obj, const UncertaintySet& set, const FeasibleSet& feasible, Index steps) {
    const double g = subgradient_bound(obj, set);
    if (!(g > 0))
        return 1.0;
    return feasible.diameter() / (g * std::sqrt(static_cast<double>(std::max<Index>(steps, 1))));
}

Index steps_for_accuracy(const Objective& obj, const UncertaintySet& set, const FeasibleSet& feasible,
                         double epsilon) {
    if (!(epsilon > 0))
        throw InvalidArgument("steps_for_accuracy: epsilon must be positive");
    const double g = subgradient_bound(obj, set);
    const double d = feasible.diameter();
    const double exact = g * g * d * d / (epsilon * epsilon);
    return std::max<Index>(1, static_cast<Index>(std::ceil(exact * (1.0 - 1e-12))));
}

double robust_value(const Objective& obj, const Vector& w, const UncertaintySet& set) {
    return inner_max(obj, w, set).value;
}

OptResult robust_minimize(const UncertaintySet& set, const Objective& obj, const FeasibleSet& feasible,
                          const OptOptions& options) {
    if (options.steps < 1)
        throw InvalidArgument("robust_minimize: T must be at least 1");
    const double eta = options.eta > 0 ? options.eta : auto_step(obj, set, feasible, options.steps);
    Rng rng(options.seed);

    OptResult out;
    out.seed = options.seed;
    out.eta = eta;
    Vector w = feasible.sample_initial(rng);
    Vector sum = w;
    if (options.keep_trace)
        out.trace.push_back(w);
    for (Index t = 1; t <= options.steps; ++t) {
        const InnerMax worst = inner_max(obj, w, set, options.ascent);
        w = feasible.project(w - eta * obj.grad_w(w, worst.c_star));
        sum += w;
        if (options.keep_trace)
            out.trace.push_back(w);
    }
    out.iterations = options.steps;
    out.w_last = w;
    out.w_avg = sum / static_cast<double>(options.steps + 1);
    const InnerMax at_avg = inner_max(obj, out.w_avg, set, options.ascent);
    out.robust_value = at_avg.value;
    out.worst_case_c = at_avg.c_star;
    return out;
}

OptResult cpo_opt(const Vector& x, const CalibratedRegion& region, const Objective& obj, const FeasibleSet& feasible,
                  const OptOptions& options) {
    if (!std::holds_alternative<GpcpScore>(region.score))
        throw InvalidArgument("cpo_opt: region must use the gpcp score");
    return robust_minimize(region_set(region, x), obj, feasible, options);
}

double nominal_optimum(const Objective& obj, const FeasibleSet& feasible, const Vector& c, const OptOptions& fallback) {
    if (obj.is_linear()) {
        // minimize a^T w
        const Vector a = obj.grad_w(Vector::Zero(feasible.dim()), c);
        switch (feasible.kind()) {
        case FeasibleKind::Box01:
            return a.cwiseMin(0.0).sum();
        case FeasibleKind::BoxBudget:
            return nominal_knapsack(-a, KnapsackInstance{feasible.weights(), feasible.budget()}).value;
        case FeasibleKind::AffineBox: {
            if ((a.array() >= 0).all()) {
                // Rebuild the graph from the incidence matrix and solve the flow LP
                // as a shortest path (the constraint matrix is totally unimodular).
                const auto& inc = feasible.incidence();
                Graph g;
                for (Index v = 0; v < inc.rows(); ++v)
                    g.node_labels.push_back(std::to_string(v));
                g.edges.resize(static_cast<std::size_t>(inc.cols()));
                for (Index e = 0; e < inc.outerSize(); ++e)
                    for (Eigen::SparseMatrix<double>::InnerIterator it(inc, e); it; ++it)
                        (it.value() > 0 ? g.edges[static_cast<std::size_t>(e)].src
                                        : g.edges[static_cast<std::size_t>(e)].dst) = it.row();
                Index source = -1, target = -1;
                for (Index v = 0; v < feasible.demand().size(); ++v) {
                    if (feasible.demand()[v] > 0.5)
                        source = v;
                    if (feasible.demand()[v] < -0.5)
                        target = v;
                }
                if (source >= 0 && target >= 0)
                    return shortest_path(g, a, source, target).cost;
            }
            break;
        }
        }
    }
    const Points point = c;
    return robust_minimize(BallUnion{point, 0.0}, obj, feasible, fallback).robust_value;
}

PessimismGap pessimism_gap(const Vector& x, const Vector& c_true, const CalibratedRegion& region,
                           const Objective& obj, const FeasibleSet& feasible, double robust_optimum) {
    const UncertaintySet set = region_set(region, x);
    PessimismGap gap;
    gap.delta = robust_optimum - nominal_optimum(obj, feasible, c_true);
    gap.diam_bound = obj.lipschitz_c * set_diameter(set);
    gap.covered = contains(region, x, c_true);
    return gap;
}

} // namespace cpo
