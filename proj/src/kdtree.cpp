#include "dloss/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dloss {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) noexcept {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double d = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double diff = a[c] - b[c];
        d += diff * diff;
    }
    return d;
}

}  // namespace

KdTree::KdTree(const Matrix& points, std::size_t leaf_size) : points_(&points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (points.rows() == 0) {
        throw std::invalid_argument("KdTree: empty point set");
    }
    if (points.cols() == 0) {
        throw std::invalid_argument("KdTree: points have no coordinates");
    }
    for (const auto v : points.values()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("KdTree: non-finite coordinate");
        }
    }
    order_.resize(points.rows());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points.rows() / leaf_size_ + 2);
    build(0, order_.size(), 0);
    ordered_points_ = points.select_rows(order_);
}

int KdTree::build(std::size_t begin, std::size_t end, std::size_t depth) {
    depth_ = std::max(depth_, depth);
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) {
        return id;
    }
    const std::size_t dim = depth % points_->cols();
    const std::size_t mid = begin + (end - begin) / 2;
    const auto& pts = *points_;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                         const double va = pts(a, dim);
                         const double vb = pts(b, dim);
                         return va < vb || (va == vb && a < b);
                     });
    const double split = pts(order_[mid], dim);
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.split_dim = dim;
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
}

std::vector<Neighbor> KdTree::knn_with_distances(std::size_t query_index, std::size_t l) const {
    const std::size_t n = size();
    if (query_index >= n) {
        throw std::out_of_range("KdTree::knn: query index " + std::to_string(query_index) + " out of range");
    }
    if (l >= n) {
        throw std::invalid_argument("KdTree::knn: l = " + std::to_string(l) + " requires more than " +
                                    std::to_string(l) + " points, have " + std::to_string(n));
    }
    std::vector<Neighbor> heap;
    heap.reserve(l + 1);
    if (l > 0) {
        std::vector<double> offsets(points_->cols(), 0.0);
        search(0, points_->row(query_index), query_index, l, heap, offsets, 0.0);
    }
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
}

std::vector<std::size_t> KdTree::knn(std::size_t query_index, std::size_t l) const {
    const auto found = knn_with_distances(query_index, l);
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& nb : found) {
        out.push_back(nb.index);
    }
    return out;
}

// heap is a max-heap under `closer`: its front is the current worst candidate.
void KdTree::search(int node_id, std::span<const double> query, std::size_t query_index, std::size_t l,
                    std::vector<Neighbor>& heap, std::vector<double>& offsets, double cell_distance) const {
    const auto& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.leaf()) {
        for (std::size_t p = node.begin; p < node.end; ++p) {
            const std::size_t idx = order_[p];
            if (idx == query_index) {
                continue;
            }
            const Neighbor cand{idx, squared_distance(query, ordered_points_.row(p))};
            if (heap.size() < l) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    const std::size_t dim = node.split_dim;
    const double diff = query[dim] - node.split_value;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, query, query_index, l, heap, offsets, cell_distance);

    const double old_offset = offsets[dim];
    const double far_distance = cell_distance - old_offset * old_offset + diff * diff;
    // The slack absorbs rounding in the running sum so equal-distance
    // candidates with smaller indices stay reachable.
    if (heap.size() < l || far_distance <= heap.front().squared_distance * (1.0 + 1e-12)) {
        offsets[dim] = diff;
        search(far, query, query_index, l, heap, offsets, far_distance);
        offsets[dim] = old_offset;
    }
}

bool KdTree::audit() const {
    const auto& pts = *points_;
    std::vector<int> seen(size(), 0);
    struct Bound {
        std::size_t dim;
        double value;
        bool upper;  // true: coordinate <= value, false: coordinate >= value
    };
    std::vector<Bound> bounds;
    bool ok = true;
    auto visit = [&](auto&& self, int id) -> void {
        const auto& node = nodes_[static_cast<std::size_t>(id)];
        for (std::size_t p = node.begin; p < node.end; ++p) {
            const std::size_t idx = order_[p];
            for (const auto& b : bounds) {
                const double v = pts(idx, b.dim);
                if (b.upper ? v > b.value : v < b.value) {
                    ok = false;
                }
            }
        }
        if (node.leaf()) {
            if (node.begin >= node.end && size() > 0) {
                ok = false;
            }
            for (std::size_t p = node.begin; p < node.end; ++p) {
                ++seen[order_[p]];
            }
            return;
        }
        const auto& l = nodes_[static_cast<std::size_t>(node.left)];
        const auto& r = nodes_[static_cast<std::size_t>(node.right)];
        if (l.begin != node.begin || l.end != r.begin || r.end != node.end) {
            ok = false;
        }
        bounds.push_back({node.split_dim, node.split_value, true});
        self(self, node.left);
        bounds.back().upper = false;
        self(self, node.right);
        bounds.pop_back();
    };
    visit(visit, 0);
    return ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace dloss
