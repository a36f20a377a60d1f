#include "cpo/kd_tree.hpp"

#include "cpo/errors.hpp"

#include <algorithm>
#include <numeric>

namespace cpo {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), Index{0});
    }
    Index find(Index i) {
        while (parent_[static_cast<std::size_t>(i)] != i) {
            auto& p = parent_[static_cast<std::size_t>(i)];
            p = parent_[static_cast<std::size_t>(p)];
            i = p;
        }
        return i;
    }
    void unite(Index a, Index b) {
        a = find(a);
        b = find(b);
        if (a != b)
            parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }

private:
    std::vector<Index> parent_;
};

} // namespace

KdTree::KdTree(Points points, Index leaf_size) : points_(std::move(points)), leaf_size_(std::max<Index>(1, leaf_size)) {
    order_.resize(static_cast<std::size_t>(points_.cols()));
    std::iota(order_.begin(), order_.end(), Index{0});
    if (points_.cols() > 0)
        build(0, points_.cols());
}

Index KdTree::build(Index begin, Index end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo = points_.col(order_[static_cast<std::size_t>(begin)]);
    node.hi = node.lo;
    for (Index i = begin + 1; i < end; ++i) {
        const auto col = points_.col(order_[static_cast<std::size_t>(i)]);
        node.lo = node.lo.cwiseMin(col);
        node.hi = node.hi.cwiseMax(col);
    }
    const auto id = static_cast<Index>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= leaf_size_)
        return id;

    Index dim = 0;
    (node.hi - node.lo).maxCoeff(&dim);
    if (node.hi[dim] == node.lo[dim])
        return id; // all points coincide
    const Index mid = begin + (end - begin) / 2;
    auto first = order_.begin() + begin;
    std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                     [&](Index a, Index b) { return points_(dim, a) < points_(dim, b); });
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

double KdTree::min_dist2(const Node& node, const Vector& p) const {
    const Vector gap = (node.lo - p).cwiseMax(p - node.hi).cwiseMax(0.0);
    return gap.squaredNorm();
}

double KdTree::max_dist2(const Node& node, const Vector& p) const {
    return (p - node.lo).cwiseAbs().cwiseMax((node.hi - p).cwiseAbs()).squaredNorm();
}

std::vector<Index> KdTree::query_ball(const Vector& p, double radius) const {
    if (p.size() != points_.rows())
        throw InvalidArgument("query_ball: dimension mismatch");
    std::vector<Index> out;
    if (nodes_.empty() || radius < 0)
        return out;
    const double r2 = radius * radius;
    std::vector<Index> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (min_dist2(node, p) > r2)
            continue;
        if (node.left < 0) {
            for (Index i = node.begin; i < node.end; ++i) {
                const Index idx = order_[static_cast<std::size_t>(i)];
                if ((points_.col(idx) - p).squaredNorm() <= r2)
                    out.push_back(idx);
            }
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> KdTree::connected_components(double radius) const {
    const Index n = points_.cols();
    DisjointSets sets(n);
    const double r2 = radius * radius;
    // A node whose box lies strictly inside the query ball of some point has
    // all its points adjacent to that point, hence mutually connected; join
    // its members once and afterwards only link its first member.
    std::vector<char> joined(nodes_.size(), 0);
    std::vector<Index> stack;
    for (Index i = 0; i < n; ++i) {
        const Vector p = points_.col(i);
        stack.assign(1, 0);
        while (!stack.empty()) {
            const Index id = stack.back();
            stack.pop_back();
            const Node& node = nodes_[static_cast<std::size_t>(id)];
            if (min_dist2(node, p) >= r2)
                continue;
            if (max_dist2(node, p) < r2) {
                const Index first = order_[static_cast<std::size_t>(node.begin)];
                if (!joined[static_cast<std::size_t>(id)]) {
                    for (Index k = node.begin + 1; k < node.end; ++k)
                        sets.unite(first, order_[static_cast<std::size_t>(k)]);
                    joined[static_cast<std::size_t>(id)] = 1;
                }
                sets.unite(i, first);
                continue;
            }
            if (node.left < 0) {
                for (Index k = node.begin; k < node.end; ++k) {
                    const Index idx = order_[static_cast<std::size_t>(k)];
                    if ((points_.col(idx) - p).squaredNorm() < r2)
                        sets.unite(i, idx);
                }
            } else {
                stack.push_back(node.left);
                stack.push_back(node.right);
            }
        }
    }
    std::vector<Index> label(static_cast<std::size_t>(n), -1);
    std::vector<Index> root_label(static_cast<std::size_t>(n), -1);
    Index next = 0;
    for (Index i = 0; i < n; ++i) {
        const auto root = static_cast<std::size_t>(sets.find(i));
        if (root_label[root] < 0)
            root_label[root] = next++;
        label[static_cast<std::size_t>(i)] = root_label[root];
    }
    return label;
}

std::vector<Index> connected_components(const Points& points, double radius) {
    if (points.cols() == 0)
        throw InvalidArgument("connected_components: no points");
    return KdTree(points).connected_components(radius);
}

} // namespace cpo
