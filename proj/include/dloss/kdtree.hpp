#pragma once

#include <cstddef>
#include <vector>

#include "dloss/matrix.hpp"

namespace dloss {

struct Neighbor {
    std::size_t index;
    double squared_distance;
};

/// Exact Euclidean k-nearest-neighbour index over the rows of a matrix.
///
/// Built by median splits that cycle through the dimensions. The tree keeps
/// a pointer to the point matrix, which must outlive it. Results are ordered
/// by ascending distance with ties broken by ascending row index, which makes
/// top-l selection identical to repeatedly taking the nearest remaining point.
class KdTree {
public:
    explicit KdTree(const Matrix& points, std::size_t leaf_size = 8);

    std::size_t size() const noexcept { return order_.size(); }
    std::size_t depth() const noexcept { return depth_; }

    /// The l nearest rows to row query_index, excluding the query row itself.
    std::vector<std::size_t> knn(std::size_t query_index, std::size_t l) const;
    std::vector<Neighbor> knn_with_distances(std::size_t query_index, std::size_t l) const;

    /// Structural check: every index in exactly one leaf and every subtree
    /// inside its ancestors' half-spaces. Exhaustive, intended for tests.
    bool audit() const;

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t split_dim = 0;
        double split_value = 0.0;
        int left = -1;
        int right = -1;
        bool leaf() const noexcept { return left < 0; }
    };

    int build(std::size_t begin, std::size_t end, std::size_t depth);
    /// offsets holds the per-dimension gap between the query and the current
    /// cell; cell_distance is the sum of their squares.
    void search(int node, std::span<const double> query, std::size_t query_index, std::size_t l,
                std::vector<Neighbor>& heap, std::vector<double>& offsets, double cell_distance) const;

    const Matrix* points_;
    std::size_t leaf_size_;
    std::size_t depth_ = 0;
    std::vector<std::size_t> order_;
    Matrix ordered_points_;  // rows of points_ in leaf order
    std::vector<Node> nodes_;
};

}  // namespace dloss
