#include "cpo/rep_points.hpp"

#include "cpo/errors.hpp"
#include "cpo/geometry.hpp"
#include "cpo/kd_tree.hpp"
#include "cpo/robust_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpo {

RegionSample sample_union_uniform(const Points& centers, double radius, Index samples_per_ball, Rng& rng) {
    if (centers.cols() == 0)
        throw InvalidArgument("sample_union_uniform: empty center list");
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    if (samples_per_ball < 1)
        throw InvalidArgument("sample_union_uniform: M must be positive");
    RegionSample out;
    out.points.resize(centers.rows(), centers.cols() * samples_per_ball);
    Index kept = 0;
    for (Index k = 0; k < centers.cols(); ++k) {
        const Ball<double> ball{centers.col(k), radius};
        for (Index m = 0; m < samples_per_ball; ++m) {
            Vector p = sample_uniform_ball(ball, rng);
            if (owned_by(p, centers, k)) {
                out.points.col(kept++) = p;
                out.source_ball.push_back(k);
            }
        }
    }
    out.points.conservativeResize(Eigen::NoChange, kept);
    return out;
}

namespace {

Index nearest(const Points& centers, const Vector& p, double* dist2 = nullptr) {
    Index best = 0;
    double best_d = (centers.col(0) - p).squaredNorm();
    for (Index k = 1; k < centers.cols(); ++k) {
        const double d = (centers.col(k) - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    if (dist2)
        *dist2 = best_d;
    return best;
}

} // namespace

KMeansResult kmeans_pp(const Points& points, Index k, Rng& rng, Index max_rounds) {
    const Index n = points.cols();
    if (k < 1 || k > n)
        throw InvalidArgument("kmeans_pp: need 1 <= k <= number of points");
    const Index dim = points.rows();

    KMeansResult out;
    out.centers.resize(dim, k);
    std::uniform_int_distribution<Index> first(0, n - 1);
    out.centers.col(0) = points.col(first(rng));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        d2[static_cast<std::size_t>(i)] = (points.col(i) - out.centers.col(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Index pick = 0;
        if (total > 0) {
            std::discrete_distribution<Index> weighted(d2.begin(), d2.end());
            pick = weighted(rng);
        } else {
            pick = first(rng);
        }
        out.centers.col(c) = points.col(pick);
        for (Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (points.col(i) - out.centers.col(c)).squaredNorm());
    }

    out.assignment.assign(static_cast<std::size_t>(n), -1);
    for (Index round = 0; round < max_rounds; ++round) {
        bool changed = false;
        double objective = 0;
        for (Index i = 0; i < n; ++i) {
            double d = 0;
            const Index a = nearest(out.centers, points.col(i), &d);
            objective += d;
            if (a != out.assignment[static_cast<std::size_t>(i)]) {
                out.assignment[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
        }
        out.objective.push_back(objective);
        out.rounds = round + 1;
        if (!changed)
            break;
        Points sums = Points::Zero(dim, k);
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            const Index a = out.assignment[static_cast<std::size_t>(i)];
            sums.col(a) += points.col(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        for (Index c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0)
                out.centers.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    // Means of a nonconvex cluster can leave the region; snap to the nearest member.
    for (Index c = 0; c < k; ++c) {
        Index best = -1;
        double best_d = kInf;
        for (Index i = 0; i < n; ++i) {
            if (out.assignment[static_cast<std::size_t>(i)] != c)
                continue;
            const double d = (points.col(i) - out.centers.col(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best < 0) {
            for (Index i = 0; i < n; ++i) {
                const double d = (points.col(i) - out.centers.col(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
        }
        out.centers.col(c) = points.col(best);
    }
    return out;
}

std::vector<Index> allocate_points(const std::vector<Index>& sizes, Index total) {
    const Index groups = static_cast<Index>(sizes.size());
    std::vector<Index> alloc(sizes.size(), 0);
    const Index population = std::accumulate(sizes.begin(), sizes.end(), Index{0});
    if (groups == 0 || population == 0 || total <= 0)
        return alloc;
    const Index target = std::min(total, population);

    std::vector<double> remainder(sizes.size());
    Index assigned = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        const double quota = static_cast<double>(target) * static_cast<double>(sizes[g]) / static_cast<double>(population);
        alloc[g] = std::min(sizes[g], static_cast<Index>(std::floor(quota)));
        remainder[g] = quota - std::floor(quota);
        assigned += alloc[g];
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    while (assigned < target) {
        bool progressed = false;
        for (std::size_t g : order) {
            if (assigned == target)
                break;
            if (alloc[g] < sizes[g]) {
                ++alloc[g];
                ++assigned;
                progressed = true;
            }
        }
        if (!progressed)
            break;
    }
    if (target >= groups) {
        // Every nonempty component gets a point, taken from the largest allocation.
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            if (alloc[g] > 0 || sizes[g] == 0)
                continue;
            const auto donor = static_cast<std::size_t>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
            if (alloc[donor] <= 1)
                break;
            --alloc[donor];
            alloc[g] = 1;
        }
    }
    return alloc;
}

RegionSummary summarize_points(RegionSample sample, double connect_radius, Index count, Index max_rounds, Rng& rng) {
    if (sample.points.cols() == 0)
        throw InvalidArgument("cpo_rps: region sample is empty");
    if (count < 1)
        throw InvalidArgument("cpo_rps: N must be positive");
    RegionSummary out;
    const Points& pts = sample.points;
    const Index dim = pts.rows();
    out.sample_component = connected_components(pts, connect_radius);
    const Index groups = *std::max_element(out.sample_component.begin(), out.sample_component.end()) + 1;
    out.component_sizes.assign(static_cast<std::size_t>(groups), 0);
    for (Index label : out.sample_component)
        ++out.component_sizes[static_cast<std::size_t>(label)];

    const std::vector<Index> alloc = allocate_points(out.component_sizes, count);
    const Index total = std::accumulate(alloc.begin(), alloc.end(), Index{0});
    out.rps.resize(dim, total);
    Index next = 0;
    for (Index g = 0; g < groups; ++g) {
        const Index want = alloc[static_cast<std::size_t>(g)];
        if (want == 0)
            continue;
        Points members(dim, out.component_sizes[static_cast<std::size_t>(g)]);
        Index m = 0;
        for (Index i = 0; i < pts.cols(); ++i)
            if (out.sample_component[static_cast<std::size_t>(i)] == g)
                members.col(m++) = pts.col(i);
        Rng sub(derive_seed(rng(), static_cast<std::uint64_t>(g)));
        const KMeansResult km = kmeans_pp(members, want, sub, max_rounds);
        for (Index c = 0; c < want; ++c) {
            out.rps.col(next++) = km.centers.col(c);
            out.rp_component.push_back(g);
        }
    }

    out.cells.assign(static_cast<std::size_t>(total), {});
    for (Index i = 0; i < pts.cols(); ++i)
        out.cells[static_cast<std::size_t>(nearest(out.rps, pts.col(i)))].push_back(i);
    out.projection_variances = Matrix::Zero(total, dim);
    for (Index r = 0; r < total; ++r)
        for (Index i : out.cells[static_cast<std::size_t>(r)])
            out.projection_variances.row(r) += (pts.col(i) - out.rps.col(r)).array().square().matrix().transpose();
    out.sample = std::move(sample);
    return out;
}

RegionSummary cpo_rps(const Points& centers, double radius, const RpOptions& options, Rng& rng) {
    RegionSample sample = sample_union_uniform(centers, radius, options.samples_per_ball, rng);
    if (sample.points.cols() == 0)
        throw InvalidArgument("cpo_rps: region sample is empty");
    const double connect = options.connect_radius > 0 ? options.connect_radius : radius;
    return summarize_points(std::move(sample), connect, options.count, options.max_rounds, rng);
}

RegionSummary cpo_rps(const Vector& x, const CalibratedRegion& region, const RpOptions& options, Rng& rng) {
    const auto* gpcp = std::get_if<GpcpScore>(&region.score);
    if (!gpcp)
        throw InvalidArgument("cpo_rps: region must use the gpcp score");
    if (!region.bounded())
        throw UnboundedRegion();
    return cpo_rps(gpcp->centers(x), region.q_hat, options, rng);
}

double rp_suboptimality(const Points& candidate, const Points& reference, const Points& samples) {
    if (candidate.cols() == 0 || reference.cols() == 0)
        throw InvalidArgument("rp_suboptimality: empty point set");
    if (samples.cols() == 0)
        throw InvalidArgument("rp_suboptimality: no region samples");
    double acc = 0;
    for (Index i = 0; i < samples.cols(); ++i) {
        double dc = 0, dr = 0;
        nearest(candidate, samples.col(i), &dc);
        nearest(reference, samples.col(i), &dr);
        acc += std::sqrt(dc) - std::sqrt(dr);
    }
    return acc / static_cast<double>(samples.cols());
}

double projection_variance(const Points& cell, const Vector& xi, Index j) {
    if (j < 0 || j >= xi.size())
        throw InvalidArgument("projection_variance: coordinate out of range");
    if (cell.cols() > 0 && cell.rows() != xi.size())
        throw InvalidArgument("projection_variance: dimension mismatch");
    return (cell.row(j).array() - xi[j]).square().sum();
}

Points grid_region_points(const Points& centers, double radius, Index bins) {
    if (centers.cols() == 0 || bins < 1)
        throw InvalidArgument("grid_region_points: need centers and at least one bin");
    if (!std::isfinite(radius))
        throw UnboundedRegion();
    const Index dim = centers.rows();
    const Vector lo = centers.rowwise().minCoeff().array() - radius;
    const Vector hi = centers.rowwise().maxCoeff().array() + radius;
    const Vector step = (hi - lo) / static_cast<double>(bins);

    Index total = 1;
    for (Index d = 0; d < dim; ++d)
        total *= bins;
    std::vector<Vector> kept;
    Vector p(dim);
    for (Index flat = 0; flat < total; ++flat) {
        Index rest = flat;
        for (Index d = 0; d < dim; ++d) {
            p[d] = lo[d] + (static_cast<double>(rest % bins) + 0.5) * step[d];
            rest /= bins;
        }
        if (gpcp_score(centers, p) <= radius)
            kept.push_back(p);
    }
    Points out(dim, static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i)
        out.col(static_cast<Index>(i)) = kept[i];
    return out;
}

} // namespace cpo
