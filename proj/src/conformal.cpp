#include "cpo/conformal.hpp"

#include "cpo/errors.hpp"
#include "cpo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace cpo {

std::string to_string(ScoreKind kind) {
    switch (kind) {
    case ScoreKind::Gpcp:
        return "gpcp";
    case ScoreKind::Box:
        return "box";
    case ScoreKind::PtcBox:
        return "ptc-b";
    case ScoreKind::Ellipsoid:
        return "ellipsoid";
    case ScoreKind::PtcEllipsoid:
        return "ptc-e";
    }
    return "unknown";
}

ScoreKind score_kind_from_string(const std::string& name) {
    for (ScoreKind k : {ScoreKind::Gpcp, ScoreKind::Box, ScoreKind::PtcBox, ScoreKind::Ellipsoid,
                        ScoreKind::PtcEllipsoid})
        if (to_string(k) == name)
            return k;
    throw InvalidArgument("unknown score kind '" + name + "' (gpcp, box, ptc-b, ellipsoid, ptc-e)");
}

std::uint64_t hash_point(const Vector& x) {
    return fnv1a(std::span(reinterpret_cast<const unsigned char*>(x.data()),
                           static_cast<std::size_t>(x.size()) * sizeof(double)));
}

std::uint64_t center_seed(std::uint64_t seed, const Vector& x) { return derive_seed(seed, hash_point(x)); }

double gpcp_score(const Points& centers, const Vector& c, Metric metric) {
    if (centers.cols() == 0)
        throw InvalidArgument("gpcp_score: empty center list");
    if (centers.rows() != c.size())
        throw InvalidArgument("gpcp_score: dimension mismatch");
    double best = kInf;
    for (Index k = 0; k < centers.cols(); ++k)
        best = std::min(best, distance(centers.col(k), c, metric));
    return best;
}

// ---------------------------------------------------------------------------

GpcpScore::GpcpScore(std::shared_ptr<const ConditionalSampler> sampler, Index k, std::uint64_t seed, Metric metric)
    : sampler_(std::move(sampler)), k_(k), seed_(seed), metric_(metric) {
    if (!sampler_)
        throw InvalidArgument("GpcpScore: null sampler");
    if (k_ < 1)
        throw InvalidArgument("GpcpScore: K must be positive");
}

Points GpcpScore::centers(const Vector& x) const {
    Rng rng(center_seed(seed_, x));
    return sampler_->sample(x, k_, rng);
}

double GpcpScore::operator()(const Vector& x, const Vector& c) const { return gpcp_score(centers(x), c, metric_); }

// ---------------------------------------------------------------------------

namespace {

double interpolated_quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Vector column_mean(const Points& p) { return p.rowwise().mean(); }

} // namespace

std::pair<Vector, Vector> robust_location_scale(const Points& points) {
    if (points.cols() == 0)
        throw InvalidArgument("robust_location_scale: no points");
    Vector median(points.rows()), scale(points.rows());
    for (Index j = 0; j < points.rows(); ++j) {
        std::vector<double> row(static_cast<std::size_t>(points.cols()));
        for (Index i = 0; i < points.cols(); ++i)
            row[static_cast<std::size_t>(i)] = points(j, i);
        median[j] = interpolated_quantile(row, 0.5);
        const double spread = 0.5 * (interpolated_quantile(row, 0.9) - interpolated_quantile(row, 0.1));
        scale[j] = std::max(spread, BaselineScore::kScaleFloor);
    }
    return {median, scale};
}

Matrix ridged_covariance(const Points& points, const Vector& mean) {
    const Index d = points.rows();
    const Index n = points.cols();
    Matrix cov = Matrix::Zero(d, d);
    if (n >= 2) {
        const Points centered = points.colwise() - mean;
        cov = centered * centered.transpose() / static_cast<double>(n - 1);
    }
    double ridge = BaselineScore::kRidge * cov.trace() / static_cast<double>(d);
    if (!(ridge > 0))
        ridge = BaselineScore::kRidge;
    cov.diagonal().array() += ridge;
    return cov;
}

BaselineScore BaselineScore::box(const Points& train_c) {
    BaselineScore s;
    s.kind_ = ScoreKind::Box;
    std::tie(s.center_, s.scales_) = robust_location_scale(train_c);
    return s;
}

BaselineScore BaselineScore::ellipsoid(const Points& train_c) {
    if (train_c.cols() == 0)
        throw InvalidArgument("ellipsoid score: no training points");
    BaselineScore s;
    s.kind_ = ScoreKind::Ellipsoid;
    s.center_ = column_mean(train_c);
    s.shape_ = ridged_covariance(train_c, s.center_);
    return s;
}

BaselineScore BaselineScore::ptc_box(const Points& train_c, std::shared_ptr<const ConditionalSampler> sampler,
                                     Index draws, std::uint64_t seed) {
    BaselineScore s = box(train_c);
    s.kind_ = ScoreKind::PtcBox;
    s.sampler_ = std::move(sampler);
    s.draws_ = draws;
    s.seed_ = seed;
    if (!s.sampler_ || draws < 1)
        throw InvalidArgument("ptc-b score: need a sampler and at least one draw");
    return s;
}

BaselineScore BaselineScore::ptc_ellipsoid(std::shared_ptr<const ConditionalSampler> sampler, Index draws,
                                           std::uint64_t seed) {
    BaselineScore s;
    s.kind_ = ScoreKind::PtcEllipsoid;
    s.sampler_ = std::move(sampler);
    s.draws_ = draws;
    s.seed_ = seed;
    if (!s.sampler_ || draws < 2)
        throw InvalidArgument("ptc-e score: need a sampler and at least two draws");
    return s;
}

BaselineScore BaselineScore::from_parts(ScoreKind kind, Vector center, Vector scales, Matrix shape,
                                        std::shared_ptr<const ConditionalSampler> sampler, Index draws,
                                        std::uint64_t seed) {
    if (kind == ScoreKind::Gpcp)
        throw InvalidArgument("BaselineScore: gpcp is not a baseline kind");
    BaselineScore s;
    s.kind_ = kind;
    s.center_ = std::move(center);
    s.scales_ = std::move(scales);
    s.shape_ = std::move(shape);
    s.sampler_ = std::move(sampler);
    s.draws_ = draws;
    s.seed_ = seed;
    if ((kind == ScoreKind::PtcBox || kind == ScoreKind::PtcEllipsoid) && !s.sampler_)
        throw InvalidArgument("BaselineScore: conditional variant needs a sampler");
    if ((kind == ScoreKind::Box || kind == ScoreKind::PtcBox) && (s.scales_.array() <= 0).any())
        throw InvalidArgument("BaselineScore: scales must be positive");
    return s;
}

BaselineGeometry BaselineScore::geometry(const Vector& x) const {
    BaselineGeometry g;
    switch (kind_) {
    case ScoreKind::Box:
        g.center = center_;
        g.scales = scales_;
        break;
    case ScoreKind::Ellipsoid:
        g.center = center_;
        g.shape = shape_;
        break;
    case ScoreKind::PtcBox: {
        Rng rng(center_seed(seed_, x));
        g.center = column_mean(sampler_->sample(x, draws_, rng));
        g.scales = scales_;
        break;
    }
    case ScoreKind::PtcEllipsoid: {
        Rng rng(center_seed(seed_, x));
        const Points draws = sampler_->sample(x, draws_, rng);
        g.center = column_mean(draws);
        g.shape = ridged_covariance(draws, g.center);
        break;
    }
    case ScoreKind::Gpcp:
        throw InvalidArgument("BaselineScore: invalid kind");
    }
    return g;
}

double BaselineScore::operator()(const Vector& x, const Vector& c) const {
    const BaselineGeometry g = geometry(x);
    if (c.size() != g.center.size())
        throw InvalidArgument("baseline score: dimension mismatch");
    if (kind_ == ScoreKind::Box || kind_ == ScoreKind::PtcBox)
        return ((c - g.center).cwiseAbs().array() / g.scales.array()).maxCoeff();
    const Vector diff = c - g.center;
    return std::sqrt(std::max(0.0, diff.dot(g.shape.ldlt().solve(diff))));
}

ScoreKind kind_of(const Score& score) {
    if (std::holds_alternative<GpcpScore>(score))
        return ScoreKind::Gpcp;
    return std::get<BaselineScore>(score).kind();
}

double evaluate(const Score& score, const Vector& x, const Vector& c) {
    return std::visit([&](const auto& s) { return s(x, c); }, score);
}

// ---------------------------------------------------------------------------

double conformal_quantile(std::span<const double> scores, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("conformal_quantile: alpha must lie in (0, 1)");
    if (scores.empty())
        throw InvalidArgument("conformal_quantile: no scores");
    const auto n = static_cast<double>(scores.size());
    // The slack keeps (n+1)(1-alpha) that should be an integer from rounding up.
    const double rank = std::ceil((n + 1.0) * (1.0 - alpha) - 1e-9);
    if (rank > n)
        return kInf;
    std::vector<double> sorted(scores.begin(), scores.end());
    const auto r = static_cast<std::size_t>(rank);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(r - 1), sorted.end());
    return sorted[r - 1];
}

CalibratedRegion calibrate(const Score& score, const Dataset& cal, double alpha) {
    if (cal.size() == 0)
        throw InvalidArgument("calibrate: empty calibration set");
    std::vector<double> scores(static_cast<std::size_t>(cal.size()));
    for (Index i = 0; i < cal.size(); ++i)
        scores[static_cast<std::size_t>(i)] = evaluate(score, cal.x.col(i), cal.c.col(i));
    return {score, conformal_quantile(scores, alpha), alpha, cal.size()};
}

bool contains(const CalibratedRegion& region, const Vector& x, const Vector& c) {
    if (!region.bounded())
        return true;
    return evaluate(region.score, x, c) <= region.q_hat;
}

double coverage(const CalibratedRegion& region, const Dataset& test) {
    if (test.size() == 0)
        throw InvalidArgument("coverage: empty test set");
    Index hits = 0;
    for (Index i = 0; i < test.size(); ++i)
        hits += contains(region, test.x.col(i), test.c.col(i)) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t hash_pair(const Dataset& d, Index i) {
    const Vector x = d.x.col(i);
    const Vector c = d.c.col(i);
    return derive_seed(hash_point(x), hash_point(c));
}

} // namespace

SelectKResult select_k(std::shared_ptr<const ConditionalSampler> sampler, const Dataset& cal1,
                       const Dataset& cal2, const SelectKOptions& options, SelectKAudit* audit) {
    if (options.k_max < 2)
        throw InvalidArgument("select_k: K_max must be at least 2");
    if (cal1.size() == 0 || cal2.size() == 0)
        throw InvalidArgument("select_k: both calibration splits must be nonempty");
    if (options.samples_per_ball < 1)
        throw InvalidArgument("select_k: samples_per_ball must be positive");
    {
        std::unordered_set<std::uint64_t> seen;
        for (Index i = 0; i < cal1.size(); ++i)
            seen.insert(hash_pair(cal1, i));
        for (Index i = 0; i < cal2.size(); ++i)
            if (seen.count(hash_pair(cal2, i)))
                throw InvalidArgument("select_k: calibration splits overlap (exchangeability violation)");
    }

    const GpcpScore full(std::move(sampler), options.k_max, options.seed, options.metric);
    const auto k_max = static_cast<std::size_t>(options.k_max);

    // distance from each cal1 target to each of its K_max centers; the K-draw
    // score is the minimum over the first K.
    std::vector<std::vector<double>> scores(k_max, std::vector<double>(static_cast<std::size_t>(cal1.size())));
    for (Index i = 0; i < cal1.size(); ++i) {
        const Vector x = cal1.x.col(i);
        if (audit)
            audit->calibration_points.push_back(hash_point(x));
        const Points centers = full.centers(x);
        double running = kInf;
        for (std::size_t k = 0; k < k_max; ++k) {
            running = std::min(running, distance(centers.col(static_cast<Index>(k)), cal1.c.col(i), options.metric));
            scores[k][static_cast<std::size_t>(i)] = running;
        }
    }

    SelectKResult result;
    for (std::size_t k = 0; k < k_max; ++k) {
        const double q = conformal_quantile(scores[k], options.alpha);
        if (!std::isfinite(q))
            throw UnboundedRegion();
        result.q_hat.push_back(q);
    }

    const auto n2 = static_cast<std::size_t>(cal2.size());
    result.volume_by_point.assign(k_max, std::vector<double>(n2));
    for (Index i = 0; i < cal2.size(); ++i) {
        const Vector x = cal2.x.col(i);
        if (audit)
            audit->volume_points.push_back(hash_point(x));
        const Points centers = full.centers(x);
        for (std::size_t k = 0; k < k_max; ++k) {
            Rng rng(derive_seed(options.seed, "volume", static_cast<std::uint64_t>(i) * k_max + k));
            const Points prefix = centers.leftCols(static_cast<Index>(k + 1));
            result.volume_by_point[k][static_cast<std::size_t>(i)] =
                union_volume_estimate(prefix, result.q_hat[k], options.samples_per_ball, rng, options.metric).value;
        }
    }
    for (std::size_t k = 0; k < k_max; ++k) {
        const auto& v = result.volume_by_point[k];
        double mean = 0;
        for (double a : v)
            mean += a;
        mean /= static_cast<double>(n2);
        double var = 0;
        for (double a : v)
            var += (a - mean) * (a - mean);
        var = n2 > 1 ? var / static_cast<double>(n2 - 1) : 0.0;
        result.volume.push_back(mean);
        result.volume_se.push_back(std::sqrt(var / static_cast<double>(n2)));
    }

    result.epsilon = options.epsilon >= 0 ? options.epsilon : 0.01 * result.volume.front();
    result.k_star = options.k_max;
    result.converged = false;
    for (std::size_t k = 0; k + 1 < k_max; ++k)
        if (std::abs(result.volume[k] - result.volume[k + 1]) <= result.epsilon) {
            result.k_star = static_cast<Index>(k + 1);
            result.converged = true;
            break;
        }
    return result;
}

} // namespace cpo
