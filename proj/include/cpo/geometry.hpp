#pragma once

#include "cpo/errors.hpp"
#include "cpo/random.hpp"
#include "cpo/types.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cpo {

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar distance(const Eigen::MatrixBase<DerivedA>& a,
                                   const Eigen::MatrixBase<DerivedB>& b,
                                   Metric metric = Metric::Euclidean) {
    if (a.size() != b.size())
        throw InvalidArgument("distance: dimension mismatch");
    switch (metric) {
    case Metric::Euclidean:
        break;
    }
    return (a - b).norm();
}

/// Volume of a `dim`-dimensional Euclidean ball: pi^(d/2) r^d / Gamma(d/2 + 1).
template <typename Scalar>
Scalar ball_volume(int dim, Scalar radius) {
    if (dim < 1)
        throw InvalidArgument("ball_volume: dim must be >= 1");
    if (!(radius >= Scalar(0)))
        throw InvalidArgument("ball_volume: radius must be nonnegative");
    if (radius == Scalar(0))
        return Scalar(0);
    using std::exp;
    using std::log;
    const Scalar half = Scalar(dim) / Scalar(2);
    // lgamma keeps large dimensions from overflowing tgamma.
    const Scalar log_vol = half * log(std::numbers::pi_v<Scalar>) + Scalar(dim) * log(radius) -
                           std::lgamma(half + Scalar(1));
    return exp(log_vol);
}

/// Uniform draw from a Euclidean ball (Muller): a normalized Gaussian direction
/// scaled by r * U^(1/d).
template <typename Scalar>
VectorX<Scalar> sample_uniform_ball(const Ball<Scalar>& ball, Rng& rng) {
    const Index dim = ball.center.size();
    if (ball.radius == Scalar(0) || dim == 0)
        return ball.center;
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    std::uniform_real_distribution<Scalar> uniform(Scalar(0), Scalar(1));
    VectorX<Scalar> dir(dim);
    Scalar norm = 0;
    do {
        for (Index i = 0; i < dim; ++i)
            dir[i] = normal(rng);
        norm = dir.norm();
    } while (norm == Scalar(0));
    const Scalar u = uniform(rng);
    return ball.center + (ball.radius * std::pow(u, Scalar(1) / Scalar(dim)) / norm) * dir;
}

template <typename DerivedP, typename DerivedC>
Index voronoi_owner(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedC>& centers,
                    Metric metric = Metric::Euclidean) {
    if (centers.cols() == 0)
        throw InvalidArgument("voronoi_owner: empty center list");
    if (centers.rows() != p.size())
        throw InvalidArgument("voronoi_owner: dimension mismatch");
    Index best = 0;
    auto best_d = distance(p, centers.col(0), metric);
    for (Index k = 1; k < centers.cols(); ++k) {
        const auto d = distance(p, centers.col(k), metric);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

/// True when `p` lies in the Voronoi cell of center `k` under the lowest-index
/// tie-break, i.e. voronoi_owner(p, centers) == k. Exits early on the first
/// competitor that claims `p`.
template <typename DerivedP, typename DerivedC>
bool owned_by(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedC>& centers, Index k,
              Metric metric = Metric::Euclidean) {
    const auto dk = distance(p, centers.col(k), metric);
    for (Index j = 0; j < centers.cols(); ++j) {
        if (j == k)
            continue;
        const auto dj = distance(p, centers.col(j), metric);
        if (dj < dk || (dj == dk && j < k))
            return false;
    }
    return true;
}

template <typename Scalar>
struct VolumeEstimate {
    Scalar value{0};
    Scalar std_error{0};
};

/// Monte Carlo volume of a union of equal-radius balls: every ball contributes
/// |B| times the fraction of its uniform samples that fall in its own Voronoi
/// cell. Unbiased; each ball's fraction is an independent binomial proportion.
template <typename Scalar>
VolumeEstimate<Scalar> union_volume_estimate(const PointsX<Scalar>& centers, Scalar radius,
                                             Index samples_per_ball, Rng& rng,
                                             Metric metric = Metric::Euclidean) {
    if (centers.cols() == 0)
        throw InvalidArgument("union_volume_estimate: empty center list");
    if (samples_per_ball <= 0)
        throw InvalidArgument("union_volume_estimate: samples_per_ball must be positive");
    const int dim = static_cast<int>(centers.rows());
    const Scalar ball = ball_volume<Scalar>(dim, radius);
    const Scalar m = Scalar(samples_per_ball);
    Scalar fraction_sum = 0;
    Scalar variance_sum = 0;
    for (Index k = 0; k < centers.cols(); ++k) {
        const Ball<Scalar> b{centers.col(k), radius};
        Index kept = 0;
        for (Index s = 0; s < samples_per_ball; ++s) {
            const VectorX<Scalar> p = sample_uniform_ball(b, rng);
            if (owned_by(p, centers, k, metric))
                ++kept;
        }
        const Scalar frac = Scalar(kept) / m;
        fraction_sum += frac;
        variance_sum += frac * (Scalar(1) - frac) / m;
    }
    return {ball * fraction_sum, ball * std::sqrt(variance_sum)};
}

} // namespace cpo
