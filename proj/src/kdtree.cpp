#include "mlab/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace mlab {

KdTree::KdTree(const PointCloud& cloud, std::size_t leaf_size)
    : dim_(cloud.dim()), leaf_size_(std::max<std::size_t>(leaf_size, 1))
{
    const std::size_t n = cloud.size();
    index_.resize(n);
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    coords_ = cloud.coords();
    if (n == 0) {
        return;
    }
    nodes_.reserve(2 * n / leaf_size_ + 2);
    // Build over source indices, then lay coordinates out in slot order.
    build(0, n);
    std::vector<double> ordered(n * dim_);
    for (std::size_t s = 0; s < n; ++s) {
        const auto p = cloud[index_[s]];
        std::copy(p.begin(), p.end(), ordered.begin() + static_cast<std::ptrdiff_t>(s * dim_));
    }
    coords_ = std::move(ordered);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end)
{
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) {
        return id;
    }
    // Split along the axis of largest spread.
    int axis = 0;
    double best_spread = -1.0;
    for (std::size_t k = 0; k < dim_; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = begin; s < end; ++s) {
            const double v = coords_[index_[s] * dim_ + k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            axis = static_cast<int>(k);
        }
    }
    if (best_spread <= 0.0) {
        return id;  // all points coincide
    }
    const std::size_t mid = begin + (end - begin) / 2;
    const auto key = [&](std::size_t i) { return coords_[i * dim_ + static_cast<std::size_t>(axis)]; };
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin), index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    const double split = key(index_[mid]);
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

KdTree::Hit KdTree::nearest(std::span<const double> query) const
{
    Hit best;
    if (!nodes_.empty()) {
        nearest_rec(0, query, best);
        best.index = index_[best.index];
    }
    return best;
}

void KdTree::nearest_rec(std::size_t id, std::span<const double> q, Hit& best) const
{
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (std::size_t s = node.begin; s < node.end; ++s) {
            const double d2 = squared_distance(q, at(s));
            if (d2 < best.squared_distance) {
                best.squared_distance = d2;
                best.index = s;
            }
        }
        return;
    }
    const double diff = q[static_cast<std::size_t>(node.axis)] - node.split;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    nearest_rec(near, q, best);
    if (diff * diff <= best.squared_distance) {
        nearest_rec(far, q, best);
    }
}

void KdTree::radius_search(std::span<const double> query, double radius, std::vector<std::size_t>& out) const
{
    out.clear();
    if (nodes_.empty() || radius < 0.0) {
        return;
    }
    radius_rec(0, query, radius * radius, out);
    for (auto& s : out) {
        s = index_[s];
    }
}

void KdTree::radius_rec(std::size_t id, std::span<const double> q, double r2, std::vector<std::size_t>& out) const
{
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (std::size_t s = node.begin; s < node.end; ++s) {
            if (squared_distance(q, at(s)) <= r2) {
                out.push_back(s);
            }
        }
        return;
    }
    const double diff = q[static_cast<std::size_t>(node.axis)] - node.split;
    if (diff <= 0.0 || diff * diff <= r2) {
        radius_rec(node.left, q, r2, out);
    }
    if (diff >= 0.0 || diff * diff <= r2) {
        radius_rec(node.right, q, r2, out);
    }
}

}  // namespace mlab
