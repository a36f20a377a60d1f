#pragma once

#include "cpo/types.hpp"

#include <vector>

namespace cpo {

/// Exact kd-tree over a fixed point set (one point per column), split at the
/// median of the widest coordinate.
class KdTree {
public:
    explicit KdTree(Points points, Index leaf_size = 16);

    /// Indices of stored points q with d(p, q) <= radius, ascending.
    std::vector<Index> query_ball(const Vector& p, double radius) const;

    /// Component label per point of the graph with an edge wherever
    /// d(p_i, p_j) < radius. Labels are 0..L-1 in order of first appearance.
    std::vector<Index> connected_components(double radius) const;

    const Points& points() const { return points_; }
    Index size() const { return points_.cols(); }

private:
    struct Node {
        Index begin{0}, end{0};  // range in order_
        Index left{-1}, right{-1};
        Vector lo, hi;           // bounding box
    };

    Index build(Index begin, Index end);
    double min_dist2(const Node& node, const Vector& p) const;
    double max_dist2(const Node& node, const Vector& p) const;

    Points points_;
    Index leaf_size_;
    std::vector<Index> order_;
    std::vector<Node> nodes_;
};

/// Labels from a union-find fed by kd-tree ball queries; see KdTree.
std::vector<Index> connected_components(const Points& points, double radius);

} // namespace cpo
