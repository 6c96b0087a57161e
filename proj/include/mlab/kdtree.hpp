#pragma once

#include "mlab/core.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace mlab {

// Static kd-tree over a point cloud. Holds its own reordered copy of the
// coordinates, so the source cloud may be destroyed after construction.
class KdTree {
public:
    struct Hit {
        std::size_t index = 0;  // index into the source cloud
        double squared_distance = std::numeric_limits<double>::infinity();
    };

    explicit KdTree(const PointCloud& cloud, std::size_t leaf_size = 12);

    std::size_t size() const { return index_.size(); }
    std::size_t dim() const { return dim_; }

    Hit nearest(std::span<const double> query) const;

    // Indices (into the source cloud) of all points with distance <= radius.
    void radius_search(std::span<const double> query, double radius, std::vector<std::size_t>& out) const;

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end);
    void nearest_rec(std::size_t node, std::span<const double> q, Hit& best) const;
    void radius_rec(std::size_t node, std::span<const double> q, double r2, std::vector<std::size_t>& out) const;

    std::span<const double> at(std::size_t slot) const { return {coords_.data() + slot * dim_, dim_}; }

    std::size_t dim_;
    std::size_t leaf_size_;
    std::vector<double> coords_;     // slot-ordered coordinates
    std::vector<std::size_t> index_; // slot -> source index
    std::vector<Node> nodes_;
};

}  // namespace mlab
