#include "dloss/tuples.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dloss/random.hpp"

namespace dloss {

namespace {

void check_tuple_count(std::size_t n, std::size_t l) {
    if (l == 0) {
        throw std::invalid_argument("tuple selection: l must be positive");
    }
    if (n <= l) {
        throw std::invalid_argument("tuple selection: need more than l = " + std::to_string(l) +
                                    " training rows, have " + std::to_string(n));
    }
}

}  // namespace

DerivativeTuple data_derivative(std::span<const double> x_i, double y_i, std::span<const double> x_j, double y_j) {
    if (x_i.size() != x_j.size()) {
        throw std::invalid_argument("data_derivative: dimension mismatch");
    }
    DerivativeTuple t;
    t.midpoint.resize(x_i.size());
    t.direction.resize(x_i.size());
    double ss = 0.0;
    for (std::size_t c = 0; c < x_i.size(); ++c) {
        t.midpoint[c] = 0.5 * (x_i[c] + x_j[c]);
        t.direction[c] = x_j[c] - x_i[c];
        ss += t.direction[c] * t.direction[c];
    }
    t.norm = std::sqrt(ss);
    if (!(t.norm > 0.0)) {
        throw std::invalid_argument("data_derivative: zero direction norm");
    }
    t.data_derivative = (y_j - y_i) / t.norm;
    return t;
}

std::string_view to_string(Selection s) noexcept {
    return s == Selection::nearest_neighbour ? "nearest_neighbour" : "random";
}

TupleSet::TupleSet(std::size_t features, Selection selection, std::size_t per_point)
    : selection_(selection), per_point_(per_point), features_(features) {}

DerivativeTuple TupleSet::at(std::size_t s) const {
    const auto m = midpoint(s);
    const auto d = direction(s);
    return DerivativeTuple{first(s), second(s), {m.begin(), m.end()}, {d.begin(), d.end()}, norm(s),
                           data_derivative(s)};
}

bool TupleSet::add(const Dataset& data, std::size_t i, std::size_t j) {
    const auto xi = data.inputs.row(i);
    const auto xj = data.inputs.row(j);
    const std::size_t k = xi.size();
    if (k != features_) {
        throw std::invalid_argument("TupleSet::add: rows have " + std::to_string(k) + " features, set has " +
                                    std::to_string(features_));
    }
    double ss = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double d = xj[c] - xi[c];
        ss += d * d;
    }
    const double norm = std::sqrt(ss);
    if (!(norm > kMinTupleDistance)) {
        return false;
    }
    const std::size_t at = records_.size();
    records_.resize(at + stride());
    double* rec = records_.data() + at;
    for (std::size_t c = 0; c < k; ++c) {
        rec[c] = 0.5 * (xi[c] + xj[c]);
        rec[k + c] = xj[c] - xi[c];
    }
    rec[2 * k] = norm;
    rec[2 * k + 1] = (data.targets[j] - data.targets[i]) / norm;
    pairs_.push_back({i, j});
    return true;
}

void TupleSet::reserve(std::size_t tuples) {
    pairs_.reserve(tuples);
    records_.reserve(tuples * stride());
}

TupleSet select_nearest(const Dataset& train, const KdTree& tree, std::size_t l) {
    const std::size_t n = train.size();
    check_tuple_count(n, l);
    if (tree.size() != n) {
        throw std::invalid_argument("select_nearest: tree built over a different point set");
    }
    TupleSet set(train.features(), Selection::nearest_neighbour, l);
    set.reserve(n * l);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t want = l;
        std::vector<Neighbor> neighbours;
        // Widen the query until l neighbours at nonzero distance are found.
        while (true) {
            neighbours = tree.knn_with_distances(i, want);
            const auto usable = static_cast<std::size_t>(
                std::count_if(neighbours.begin(), neighbours.end(), [](const Neighbor& nb) {
                    return std::sqrt(nb.squared_distance) > kMinTupleDistance;
                }));
            if (usable >= l || want == n - 1) {
                break;
            }
            want = std::min(n - 1, want + (l - usable));
        }
        std::size_t added = 0;
        for (const auto& nb : neighbours) {
            if (added == l) {
                break;
            }
            if (set.add(train, i, nb.index)) {
                ++added;
            }
        }
    }
    return set;
}

TupleSet select_nearest(const Dataset& train, std::size_t l) {
    const KdTree tree(train.inputs);
    return select_nearest(train, tree, l);
}

TupleSet select_random(const Dataset& train, std::size_t l, std::uint64_t seed) {
    const std::size_t n = train.size();
    check_tuple_count(n, l);
    TupleSet set(train.features(), Selection::random, l);
    set.reserve(n * l);
    auto rng = make_rng(seed, Stream::tuples);
    std::uniform_int_distribution<std::size_t> pick(0, n - 2);
    // Draws do not depend on the anchor, so a few are taken ahead and their
    // rows prefetched.
    constexpr std::size_t kLookahead = 16;
    std::array<std::size_t, kLookahead> pending{};
    std::size_t head = 0;
    auto prefetch = [&](std::size_t u) {
        __builtin_prefetch(train.inputs.row(u).data());
        __builtin_prefetch(&train.targets[u]);
    };
    for (auto& u : pending) {
        u = pick(rng);
        prefetch(u);
    }
    auto draw = [&] {
        const std::size_t u = pending[head];
        pending[head] = pick(rng);
        prefetch(pending[head]);
        head = (head + 1) % kLookahead;
        return u;
    };
    std::vector<std::size_t> tried;
    for (std::size_t i = 0; i < n; ++i) {
        tried.clear();
        std::size_t accepted = 0;
        int coincident = 0;
        // Every partner is drawn uniformly from the indices != i not yet tried.
        while (accepted < l && tried.size() < n - 1) {
            std::size_t j = 0;
            do {
                j = draw();
                if (j >= i) {
                    ++j;
                }
            } while (std::find(tried.begin(), tried.end(), j) != tried.end());
            tried.push_back(j);
            if (set.add(train, i, j)) {
                ++accepted;
            } else if (++coincident > kRandomRedrawLimit) {
                break;
            }
        }
    }
    return set;
}

void write_tuples_csv(const TupleSet& tuples, std::ostream& out) {
    out << "i,j,norm,data_derivative\n";
    char buf[64];
    for (std::size_t s = 0; s < tuples.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", tuples.norm(s), tuples.data_derivative(s));
        out << tuples.first(s) << ',' << tuples.second(s) << ',' << buf << '\n';
    }
}

}  // namespace dloss
