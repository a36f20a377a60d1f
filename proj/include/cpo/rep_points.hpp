#pragma once

#include "cpo/conformal.hpp"
#include "cpo/random.hpp"
#include "cpo/types.hpp"

#include <vector>

namespace cpo {

/// Uniform sample over a union of balls, with the ball each point came from.
struct RegionSample {
    Points points;
    std::vector<Index> source_ball;
};

/// M uniform draws per ball, keeping only those inside their own ball's
/// Voronoi cell; the kept points are uniform on the union.
RegionSample sample_union_uniform(const Points& centers, double radius, Index samples_per_ball, Rng& rng);

struct KMeansResult {
    Points centers;                  // snapped to member points
    std::vector<Index> assignment;   // per point
    std::vector<double> objective;   // sum of squared distances after each Lloyd round
    Index rounds{0};
};

/// K-Means++ seeding, Lloyd rounds until the assignment stops changing (at
/// most `max_rounds`), then each center snapped to its nearest point.
KMeansResult kmeans_pp(const Points& points, Index k, Rng& rng, Index max_rounds = 100);

/// Largest-remainder split of `total` over component sizes, at least one per
/// component when total >= #components, never more than a component holds.
std::vector<Index> allocate_points(const std::vector<Index>& sizes, Index total);

struct RegionSummary {
    Points rps;                              // one column per representative point
    std::vector<Index> rp_component;         // component of each RP
    std::vector<Index> component_sizes;
    std::vector<Index> sample_component;     // component of each sample point
    std::vector<std::vector<Index>> cells;   // sample indices in each RP's Voronoi cell
    Matrix projection_variances;             // rps x dim
    RegionSample sample;
};

struct RpOptions {
    Index count{5};               // N
    Index samples_per_ball{1000}; // M
    /// Edge radius for connectivity; <= 0 uses the region radius.
    double connect_radius{0};
    Index max_rounds{100};
};

/// Representative points of the uniform distribution on a union of balls.
RegionSummary cpo_rps(const Points& centers, double radius, const RpOptions& options, Rng& rng);
/// Same, for a calibrated GPCP region at x.
RegionSummary cpo_rps(const Vector& x, const CalibratedRegion& region, const RpOptions& options, Rng& rng);

/// Summary built from an arbitrary point set already covering the region.
RegionSummary summarize_points(RegionSample sample, double connect_radius, Index count, Index max_rounds, Rng& rng);

/// mean over c of [d(c, candidate) - d(c, reference)]
double rp_suboptimality(const Points& candidate, const Points& reference, const Points& samples);

/// Sum over the cell of (c_j - xi_j)^2.
double projection_variance(const Points& cell, const Vector& xi, Index j);

/// Grid points (bins per dimension over the bounding box of the union) that
/// fall inside the union.
Points grid_region_points(const Points& centers, double radius, Index bins);

} // namespace cpo
