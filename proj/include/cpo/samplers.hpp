#pragma once

#include "cpo/random.hpp"
#include "cpo/tasks.hpp"
#include "cpo/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cpo {

/// Draws from an approximation of P(C | x). Implementations are stateless:
/// the draws depend only on (x, generator state).
class ConditionalSampler {
public:
    virtual ~ConditionalSampler() = default;
    virtual Index dim_x() const = 0;
    virtual Index dim_c() const = 0;
    /// n i.i.d. draws, one per column.
    virtual Points sample(const Vector& x, Index n, Rng& rng) const = 0;

protected:
    void check_x(const Vector& x) const;
};

/// Sample from N(mean, sd^2) restricted to [lo, hi]. Uses uniform, Gaussian or
/// exponential proposals depending on where the interval sits, so it stays
/// efficient far in the tails.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

/// log Phi(t), accurate in the far lower tail.
double log_normal_cdf(double t);

// ---------------------------------------------------------------------------

/// Conjugate posterior for the Gaussian linear task: prior N(0, 0.1 I),
/// likelihood N(x | c, 0.1 I), posterior N(x/2, 0.05 I).
class GaussianLinearSampler final : public ConditionalSampler {
public:
    explicit GaussianLinearSampler(Index dim = 10) : dim_(dim) {}
    Index dim_x() const override { return dim_; }
    Index dim_c() const override { return dim_; }
    Points sample(const Vector& x, Index n, Rng& rng) const override;

private:
    Index dim_;
};

/// Posterior under a U(-1,1)^d prior: independent truncated normals N(x_i, 0.1) on [-1, 1].
class GaussianLinearUniformSampler final : public ConditionalSampler {
public:
    explicit GaussianLinearUniformSampler(Index dim = 10) : dim_(dim) {}
    Index dim_x() const override { return dim_; }
    Index dim_c() const override { return dim_; }
    Points sample(const Vector& x, Index n, Rng& rng) const override;

private:
    Index dim_;
};

/// Posterior of the two-scale Gaussian mixture under a U(-10,10)^2 prior.
class GaussianMixtureSampler final : public ConditionalSampler {
public:
    Index dim_x() const override { return 2; }
    Index dim_c() const override { return 2; }
    Points sample(const Vector& x, Index n, Rng& rng) const override;
    /// Posterior probability of the broad (unit-variance) component at x.
    double broad_responsibility(const Vector& x) const;

    static constexpr double kBoxHalfWidth = 10.0;
    static constexpr double kBroadVar = 1.0;
    static constexpr double kNarrowVar = 0.01;
};

Vector two_moons_simulate(const Vector& w, double angle, double radius);

struct AbcOptions {
    /// Acceptance radius; <= 0 means "use the pilot quantile".
    double tolerance{0};
    double pilot_quantile{0.05};
    Index pilot_size{10000};
    /// Maximum number of simulations per call.
    Index budget{2000000};
};

/// ABC rejection for Two Moons: prior U(-1,1)^2, accept when the simulated
/// observation lands within the tolerance of x.
class TwoMoonsAbcSampler final : public ConditionalSampler {
public:
    explicit TwoMoonsAbcSampler(AbcOptions options = {}) : options_(options) {}
    Index dim_x() const override { return 2; }
    Index dim_c() const override { return 2; }
    Points sample(const Vector& x, Index n, Rng& rng) const override;
    double pilot_tolerance(const Vector& x, Rng& rng) const;
    const AbcOptions& options() const { return options_; }

private:
    AbcOptions options_;
};

/// Ignores x and always returns the same point.
class ConstantSampler final : public ConditionalSampler {
public:
    ConstantSampler(Index dim_x, Vector point) : dim_x_(dim_x), point_(std::move(point)) {}
    Index dim_x() const override { return dim_x_; }
    Index dim_c() const override { return point_.size(); }
    Points sample(const Vector& x, Index n, Rng& rng) const override;

private:
    Index dim_x_;
    Vector point_;
};

// ---------------------------------------------------------------------------
// Precipitation

struct PrecipModel {
    Index width{16};
    Index height{16};
    Index frames{2}; // conditioning frames per observation
    double move_sd{1.0}; // pixels, displacement noise of a bump per step
    double amplitude_log_sd{0.2};
    double bump_width{2.0}; // pixels
    double noise_amplitude{0.05};
    double peak_threshold{0.15};
};

struct Bump {
    double px{0}, py{0};
    double amplitude{0};
    double width{1};
};

/// Render bumps plus optional noise into a W x H field, clamped at zero.
Matrix render_bumps(const std::vector<Bump>& bumps, const PrecipModel& model);
/// Low-frequency zero-mean cosine noise.
Matrix smooth_noise(const PrecipModel& model, Rng& rng);
/// Up to three local maxima above the threshold, strongest first.
std::vector<Bump> fit_bumps(const Matrix& frame, const PrecipModel& model);

/// Stochastic stand-in for a learned nowcaster: x holds `frames` stacked W x H
/// frames (column-major per frame); each draw is one future field, flattened.
class PrecipFieldSampler final : public ConditionalSampler {
public:
    explicit PrecipFieldSampler(PrecipModel model = {}) : model_(model) {}
    Index dim_x() const override { return model_.frames * model_.width * model_.height; }
    Index dim_c() const override { return model_.width * model_.height; }
    Points sample(const Vector& x, Index n, Rng& rng) const override;
    std::vector<Matrix> frames(const Vector& x) const;
    const PrecipModel& model() const { return model_; }

private:
    PrecipModel model_;
};

/// Composes precipitation draws with the edge-weight map, so regions live in
/// edge-weight space.
class EdgeWeightSampler final : public ConditionalSampler {
public:
    EdgeWeightSampler(std::shared_ptr<const PrecipFieldSampler> field, std::shared_ptr<const Graph> graph,
                      BoundingBox bbox);
    Index dim_x() const override { return field_->dim_x(); }
    Index dim_c() const override { return graph_->num_edges(); }
    Points sample(const Vector& x, Index n, Rng& rng) const override;

private:
    std::shared_ptr<const PrecipFieldSampler> field_;
    std::shared_ptr<const Graph> graph_;
    BoundingBox bbox_;
    Vector nominal_;
};

// ---------------------------------------------------------------------------
// Task registry

struct RoutingModel {
    std::shared_ptr<const Graph> graph;
    BoundingBox bbox;
    PrecipModel precip;
};

struct Task {
    std::string name;
    Index dim_x{0};
    Index dim_c{0};
    /// One (x, c) pair from the joint distribution.
    std::function<std::pair<Vector, Vector>(Rng&)> joint;
    /// Present for prior/simulator tasks.
    std::function<Vector(Rng&)> prior;
    std::function<Vector(const Vector&, Rng&)> simulate;
    std::shared_ptr<const ConditionalSampler> sampler;
    /// Set for the routing task.
    std::shared_ptr<const RoutingModel> routing;
};

struct TaskOptions {
    Index dim{0}; // 0 keeps the task's default dimension
    Index grid_rows{8};
    Index grid_cols{8};
    AbcOptions abc{};
};

std::vector<std::string> task_names();
/// Throws InvalidArgument listing the registry for unknown names.
Task make_task(const std::string& name, const TaskOptions& options = {});

struct Dataset {
    Points x; // one observation per column
    Points c;
    Index size() const { return x.cols(); }
};

/// n joint draws; draw i uses seed derive_seed(seed, i).
Dataset draw_dataset(const Task& task, Index n, std::uint64_t seed);

} // namespace cpo
