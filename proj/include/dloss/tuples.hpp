#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dloss/dataset.hpp"
#include "dloss/kdtree.hpp"
#include "dloss/matrix.hpp"

namespace dloss {

/// Tuples whose inputs are closer than this are skipped; the data derivative
/// is undefined for a zero direction.
inline constexpr double kMinTupleDistance = 1e-12;

/// Retries for a random partner that coincides with the anchor point.
inline constexpr int kRandomRedrawLimit = 16;

/// Geometry and slope of one ordered pair ((x_i, y_i), (x_j, y_j)).
struct DerivativeTuple {
    std::size_t i = 0;
    std::size_t j = 0;
    std::vector<double> midpoint;   // (x_i + x_j) / 2
    std::vector<double> direction;  // x_j - x_i
    double norm = 0.0;              // |x_j - x_i|
    double data_derivative = 0.0;   // (y_j - y_i) / norm
};

/// Throws std::invalid_argument when x_i and x_j coincide.
DerivativeTuple data_derivative(std::span<const double> x_i, double y_i, std::span<const double> x_j, double y_j);

enum class Selection { nearest_neighbour, random };

std::string_view to_string(Selection s) noexcept;

/// Structure-of-arrays store for the tuples built from one training set.
class TupleSet {
public:
    TupleSet(std::size_t features, Selection selection, std::size_t per_point);

    Selection selection() const noexcept { return selection_; }
    std::size_t per_point() const noexcept { return per_point_; }
    std::size_t features() const noexcept { return features_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }

    std::size_t first(std::size_t s) const noexcept { return pairs_[s].first; }
    std::size_t second(std::size_t s) const noexcept { return pairs_[s].second; }
    std::span<const double> midpoint(std::size_t s) const noexcept { return {record(s), features_}; }
    std::span<const double> direction(std::size_t s) const noexcept { return {record(s) + features_, features_}; }
    double norm(std::size_t s) const noexcept { return record(s)[2 * features_]; }
    double data_derivative(std::size_t s) const noexcept { return record(s)[2 * features_ + 1]; }

    DerivativeTuple at(std::size_t s) const;

    /// Appends the tuple (i, j); returns false (and stores nothing) when the
    /// points are closer than kMinTupleDistance.
    bool add(const Dataset& data, std::size_t i, std::size_t j);
    void reserve(std::size_t tuples);

    friend bool operator==(const TupleSet&, const TupleSet&) = default;

private:
    struct Pair {
        std::size_t first;
        std::size_t second;
        friend bool operator==(const Pair&, const Pair&) = default;
    };

    std::size_t stride() const noexcept { return 2 * features_ + 2; }
    const double* record(std::size_t s) const noexcept { return records_.data() + s * stride(); }

    Selection selection_;
    std::size_t per_point_;
    std::size_t features_;
    std::vector<Pair> pairs_;
    // One record per tuple: midpoint, direction, norm, data derivative.
    std::vector<double> records_;
};

/// For every row i, tuples (i, j) for its l nearest neighbours j. Neighbours
/// at zero distance are skipped in favour of the next nearest one.
TupleSet select_nearest(const Dataset& train, const KdTree& tree, std::size_t l);
TupleSet select_nearest(const Dataset& train, std::size_t l);

/// For every row i, l distinct partners j != i drawn uniformly without
/// replacement.
TupleSet select_random(const Dataset& train, std::size_t l, std::uint64_t seed);

/// Debug dump: header i,j,norm,data_derivative.
void write_tuples_csv(const TupleSet& tuples, std::ostream& out);

}  // namespace dloss
