#pragma once

#include "cpo/conformal.hpp"
#include "cpo/random.hpp"
#include "cpo/types.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <variant>
#include <vector>

namespace cpo {

enum class ObjectiveKind { Linear, LinearNeg, General };

/// f(w, c), convex in w and concave in c.
struct Objective {
    ObjectiveKind kind{ObjectiveKind::Linear};
    /// L: Lipschitz constant of f in c over the feasible set.
    double lipschitz_c{0};
    /// Bound on ||grad_w f|| over the region, used for the automatic step.
    /// Zero lets the solver derive it (linear objectives) or fall back to L.
    double lipschitz_w{0};
    std::function<double(const Vector&, const Vector&)> value_fn;
    std::function<Vector(const Vector&, const Vector&)> grad_w_fn;
    std::function<Vector(const Vector&, const Vector&)> grad_c_fn;

    static Objective linear(double lipschitz_c);
    static Objective linear_neg(double lipschitz_c);
    static Objective general(std::function<double(const Vector&, const Vector&)> value,
                             std::function<Vector(const Vector&, const Vector&)> grad_w,
                             std::function<Vector(const Vector&, const Vector&)> grad_c, double lipschitz_c,
                             double lipschitz_w = 0);

    double value(const Vector& w, const Vector& c) const;
    Vector grad_w(const Vector& w, const Vector& c) const;
    Vector grad_c(const Vector& w, const Vector& c) const;
    bool is_linear() const { return kind != ObjectiveKind::General; }
};

enum class FeasibleKind { Box01, BoxBudget, AffineBox };

struct DykstraOptions {
    double tolerance{1e-8};
    Index max_iterations{10000};
};

/// [0,1]^n, optionally with a budget p^T w <= B or flow constraints A w = b.
class FeasibleSet {
public:
    static FeasibleSet box01(Index n);
    static FeasibleSet box_budget(Vector weights, double budget);
    /// Runs a phase-1 projection and throws Infeasible if no point of
    /// {A w = b} intersect [0,1]^E is found.
    static FeasibleSet affine_box(Eigen::SparseMatrix<double> a, Vector b, DykstraOptions options = {});

    FeasibleKind kind() const { return kind_; }
    Index dim() const { return dim_; }
    const Vector& weights() const { return weights_; }
    double budget() const { return budget_; }
    const Eigen::SparseMatrix<double>& incidence() const { return a_; }
    const Vector& demand() const { return b_; }

    /// Euclidean projection.
    Vector project(const Vector& w) const;
    bool contains(const Vector& w, double tol = 1e-6) const;
    /// Upper bound on the diameter (the diagonal of [0,1]^n).
    double diameter() const;
    /// Upper bound on max ||w|| over the set; the Lipschitz constant in c of c^T w.
    double max_norm() const;
    /// Box sets: uniform (budget by rejection, falling back to projection);
    /// AffineBox: projection of a uniform box point.
    Vector sample_initial(Rng& rng) const;
    /// Largest |A w - b| entry (0 for non-flow sets).
    double flow_residual(const Vector& w) const;

private:
    Vector project_budget(const Vector& w) const;
    Vector project_affine(const Vector& w) const;
    Vector dykstra(const Vector& w) const;

    FeasibleKind kind_{FeasibleKind::Box01};
    Index dim_{0};
    Vector weights_;
    double budget_{0};
    Eigen::SparseMatrix<double> a_;
    Vector b_;
    DykstraOptions dykstra_;
    std::shared_ptr<const Eigen::CompleteOrthogonalDecomposition<Matrix>> normal_;
};

// ---------------------------------------------------------------------------
// Uncertainty sets and inner maximization

struct BallUnion {
    Points centers;
    double radius{0};
};

struct BoxSet {
    Vector center;
    Vector scales;
    double radius{0};
};

struct EllipsoidSet {
    Vector center;
    Matrix shape;
    double radius{0};
};

using UncertaintySet = std::variant<BallUnion, BoxSet, EllipsoidSet>;

struct InnerMax {
    Vector c_star;
    double value{0};
    Index ball{0}; // attaining ball for unions
};

struct AscentOptions {
    double tolerance{1e-8}; // relative change in value
    Index max_iterations{10000};
};

/// max over B_r(center) of f(w, .). Closed form for linear objectives,
/// projected gradient ascent otherwise.
InnerMax inner_max_ball(const Objective& obj, const Vector& w, const Vector& center, double radius,
                        const AscentOptions& ascent = {});
/// Maximum over the union of balls; lowest index wins ties. Throws
/// UnboundedRegion when the radius is infinite.
InnerMax inner_max_union(const Objective& obj, const Vector& w, const Points& centers, double radius,
                         const AscentOptions& ascent = {});
/// Linear objectives only: center^T g + r sum_j s_j |g_j| with g = grad_c f.
InnerMax inner_max_box(const Objective& obj, const Vector& w, const Vector& center, const Vector& scales,
                       double radius);
/// Linear objectives only: center^T g + r sqrt(g^T S g).
InnerMax inner_max_ellipsoid(const Objective& obj, const Vector& w, const Vector& center, const Matrix& shape,
                             double radius);
InnerMax inner_max(const Objective& obj, const Vector& w, const UncertaintySet& set, const AscentOptions& ascent = {});

/// Explicit geometry of a calibrated region at x.
UncertaintySet region_set(const CalibratedRegion& region, const Vector& x);
double set_diameter(const UncertaintySet& set);
/// max ||c|| over the set.
double set_max_norm(const UncertaintySet& set);

// ---------------------------------------------------------------------------
// Solver

struct OptOptions {
    Index steps{1000}; // T
    double eta{0};     // <= 0: D / (G sqrt(T))
    std::uint64_t seed{0};
    bool keep_trace{false};
    AscentOptions ascent{};
};

struct OptResult {
    Vector w_avg;
    Vector w_last;
    double robust_value{0}; // phi(w_avg), recomputed
    Vector worst_case_c;
    Index iterations{0};
    std::uint64_t seed{0};
    double eta{0};
    std::vector<Vector> trace;
};

/// Step size for T steps: D / (G sqrt(T)), D the set diameter and G a bound on
/// the subgradient norm of phi.
double auto_step(const Objective& obj, const UncertaintySet& set, const FeasibleSet& feasible, Index steps);
/// Steps for accuracy epsilon: ceil(G^2 D^2 / eps^2).
Index steps_for_accuracy(const Objective& obj, const UncertaintySet& set, const FeasibleSet& feasible,
                         double epsilon);

/// Averaged projected subgradient descent on phi(w) = max_{c in set} f(w, c).
OptResult robust_minimize(const UncertaintySet& set, const Objective& obj, const FeasibleSet& feasible,
                          const OptOptions& options);

/// The solver over a calibrated GPCP region at x.
OptResult cpo_opt(const Vector& x, const CalibratedRegion& region, const Objective& obj,
                  const FeasibleSet& feasible, const OptOptions& options);

/// phi(w) for a fixed decision.
double robust_value(const Objective& obj, const Vector& w, const UncertaintySet& set);

/// min_w f(w, c) over the set: greedy for box/budget sets, shortest path for
/// flow sets (linear objectives), converged descent otherwise.
double nominal_optimum(const Objective& obj, const FeasibleSet& feasible, const Vector& c,
                       const OptOptions& fallback = {});

struct PessimismGap {
    double delta{0};      // robust optimum - nominal optimum at c_true
    double diam_bound{0}; // L * diam(U(x))
    bool covered{false};
};

PessimismGap pessimism_gap(const Vector& x, const Vector& c_true, const CalibratedRegion& region,
                           const Objective& obj, const FeasibleSet& feasible, double robust_optimum);

} // namespace cpo
