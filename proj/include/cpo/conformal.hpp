#pragma once

#include "cpo/samplers.hpp"
#include "cpo/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cpo {

enum class ScoreKind { Gpcp, Box, PtcBox, Ellipsoid, PtcEllipsoid };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

/// Minimum distance from c to K sampler draws at x. The draws are a pure
/// function of (x, seed), so scoring, membership, optimization and RP
/// extraction all see the same centers for a given query.
class GpcpScore {
public:
    GpcpScore(std::shared_ptr<const ConditionalSampler> sampler, Index k, std::uint64_t seed,
              Metric metric = Metric::Euclidean);

    Points centers(const Vector& x) const;
    double operator()(const Vector& x, const Vector& c) const;

    const ConditionalSampler& sampler() const { return *sampler_; }
    std::shared_ptr<const ConditionalSampler> sampler_ptr() const { return sampler_; }
    Index k() const { return k_; }
    std::uint64_t seed() const { return seed_; }
    Metric metric() const { return metric_; }

private:
    std::shared_ptr<const ConditionalSampler> sampler_;
    Index k_;
    std::uint64_t seed_;
    Metric metric_;
};

/// Seed for the center draw at x.
std::uint64_t center_seed(std::uint64_t seed, const Vector& x);

/// min_k d(center_k, c)
double gpcp_score(const Points& centers, const Vector& c, Metric metric = Metric::Euclidean);

/// Center and scale of a box or ellipsoid at a particular x.
struct BaselineGeometry {
    Vector center;
    Vector scales; // box variants
    Matrix shape;  // ellipsoid variants (covariance incl. ridge)
};

/// Box / ellipsoid scores. Box: max_j |c_j - m_j| / s_j. Ellipsoid:
/// Mahalanobis distance. The PTC variants take the center (and for PTC-E the
/// covariance) from `draws` conditional samples at x.
class BaselineScore {
public:
    static BaselineScore box(const Points& train_c);
    static BaselineScore ellipsoid(const Points& train_c);
    static BaselineScore ptc_box(const Points& train_c, std::shared_ptr<const ConditionalSampler> sampler,
                                 Index draws, std::uint64_t seed);
    static BaselineScore ptc_ellipsoid(std::shared_ptr<const ConditionalSampler> sampler, Index draws,
                                       std::uint64_t seed);
    /// Rebuild from serialized parameters.
    static BaselineScore from_parts(ScoreKind kind, Vector center, Vector scales, Matrix shape,
                                    std::shared_ptr<const ConditionalSampler> sampler, Index draws,
                                    std::uint64_t seed);

    ScoreKind kind() const { return kind_; }
    BaselineGeometry geometry(const Vector& x) const;
    double operator()(const Vector& x, const Vector& c) const;

    const Vector& center() const { return center_; }
    const Vector& scales() const { return scales_; }
    const Matrix& shape() const { return shape_; }
    Index draws() const { return draws_; }
    std::uint64_t seed() const { return seed_; }
    const ConditionalSampler* sampler() const { return sampler_.get(); }

    static constexpr double kScaleFloor = 1e-9;
    static constexpr double kRidge = 1e-6;

private:
    ScoreKind kind_{ScoreKind::Box};
    Vector center_;
    Vector scales_;
    Matrix shape_;
    std::shared_ptr<const ConditionalSampler> sampler_;
    Index draws_{0};
    std::uint64_t seed_{0};
};

/// Sample covariance with ridge 1e-6 * trace / dim added to the diagonal.
Matrix ridged_covariance(const Points& points, const Vector& mean);

/// Median and half inter-decile range per coordinate.
std::pair<Vector, Vector> robust_location_scale(const Points& points);

using Score = std::variant<GpcpScore, BaselineScore>;

ScoreKind kind_of(const Score& score);
double evaluate(const Score& score, const Vector& x, const Vector& c);

struct CalibratedRegion {
    Score score;
    double q_hat{0}; // +inf when the rank exceeds n
    double alpha{0.05};
    Index n_cal{0};

    bool bounded() const { return std::isfinite(q_hat); }
};

/// r-th smallest score with r = ceil((n+1)(1-alpha)), or +inf when r > n.
double conformal_quantile(std::span<const double> scores, double alpha);

CalibratedRegion calibrate(const Score& score, const Dataset& cal, double alpha);

bool contains(const CalibratedRegion& region, const Vector& x, const Vector& c);

/// Fraction of pairs inside the region.
double coverage(const CalibratedRegion& region, const Dataset& test);

// ---------------------------------------------------------------------------
// K selection

struct SelectKOptions {
    double alpha{0.05};
    Index k_max{15};
    /// Volume tolerance; negative means 1% of the K = 1 volume.
    double epsilon{-1.0};
    Index samples_per_ball{1000};
    std::uint64_t seed{0};
    Metric metric{Metric::Euclidean};
};

/// Records which data points each phase touched (by hash of x).
struct SelectKAudit {
    std::vector<std::uint64_t> calibration_points;
    std::vector<std::uint64_t> volume_points;
};

struct SelectKResult {
    Index k_star{1};
    bool converged{true}; // false: no K met the tolerance and K_max was returned
    double epsilon{0};
    std::vector<double> q_hat;     // index K-1
    std::vector<double> volume;    // mean union volume over D_cal2
    std::vector<double> volume_se; // standard error of that mean
    /// Per-point volumes, volume_by_point[K-1][i].
    std::vector<std::vector<double>> volume_by_point;
};

std::uint64_t hash_point(const Vector& x);

/// Calibrate q_K on cal1 for K = 1..K_max, estimate the mean union volume on
/// cal2, and return the first K whose next step changes the volume by at most
/// epsilon.
SelectKResult select_k(std::shared_ptr<const ConditionalSampler> sampler, const Dataset& cal1,
                       const Dataset& cal2, const SelectKOptions& options, SelectKAudit* audit = nullptr);

} // namespace cpo
