#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dloss/tuples.hpp"

using namespace dloss;

namespace {

Dataset table(std::initializer_list<std::vector<double>> rows, std::vector<double> y) {
    Dataset d;
    d.name = "t";
    for (const auto& r : rows) d.inputs.append_row(r);
    d.targets = std::move(y);
    return d;
}

Dataset random_affine(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double>& c, double& b) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    c.assign(k, 0.0);
    for (auto& v : c) v = 5.0 * u(rng);
    b = u(rng);
    Dataset d;
    d.name = "affine";
    d.inputs = Matrix(n, k);
    d.targets.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        double y = b;
        for (std::size_t j = 0; j < k; ++j) {
            d.inputs(r, j) = u(rng);
            y += c[j] * d.inputs(r, j);
        }
        d.targets[r] = y;
    }
    return d;
}

}  // namespace

TEST_CASE("data_derivative examples") {
    const auto a = data_derivative(std::vector<double>{0.0}, 0.0, std::vector<double>{2.0}, 4.0);
    CHECK(a.norm == 2.0);
    CHECK(a.data_derivative == 2.0);
    CHECK(a.midpoint == std::vector<double>{1.0});

    const auto b = data_derivative(std::vector<double>{0.0, 0.0}, 1.0, std::vector<double>{3.0, 4.0}, 11.0);
    CHECK(b.norm == 5.0);
    CHECK(b.data_derivative == 2.0);
    CHECK(b.direction == std::vector<double>{3.0, 4.0});

    const auto c = data_derivative(std::vector<double>{0.3, -2.0}, 7.0, std::vector<double>{1.0, 9.0}, 7.0);
    CHECK(c.data_derivative == 0.0);

    CHECK_THROWS_AS(data_derivative(std::vector<double>{1.0}, 0.0, std::vector<double>{1.0}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("data_derivative antisymmetry and noise sensitivity") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> xi(4), xj(4);
        for (auto& v : xi) v = g(rng);
        for (auto& v : xj) v = g(rng);
        const double yi = g(rng), yj = g(rng);
        const auto f = data_derivative(xi, yi, xj, yj);
        const auto r = data_derivative(xj, yj, xi, yi);
        CHECK(r.norm == f.norm);
        CHECK(r.midpoint == f.midpoint);
        CHECK(r.data_derivative == -f.data_derivative);
        for (std::size_t c = 0; c < 4; ++c) CHECK(r.direction[c] == -f.direction[c]);
        CHECK(std::abs(f.data_derivative * f.norm - (yj - yi)) <= 1e-12 * std::max(1.0, std::abs(yj - yi)));
        const double eps = 0.01;
        const auto p = data_derivative(xi, yi, xj, yj + eps);
        CHECK(p.data_derivative - f.data_derivative == doctest::Approx(eps / f.norm).epsilon(1e-9));
    }
}

TEST_CASE("nearest selection on three 1-D rows") {
    const Dataset d = table({{0.0}, {1.0}, {2.0}}, {0.0, 1.0, 4.0});
    const TupleSet t = select_nearest(d, 1);
    REQUIRE(t.size() == 3);
    CHECK(t.first(0) == 0);
    CHECK(t.second(0) == 1);
    CHECK(t.data_derivative(0) == 1.0);
    CHECK(t.second(1) == 0);
    CHECK(t.data_derivative(1) == -1.0);
    CHECK(t.second(2) == 1);
    CHECK(t.data_derivative(2) == -3.0);
}

TEST_CASE("nearest selection skips a zero-distance neighbour") {
    const Dataset d = table({{0.0}, {0.0}, {1.0}, {3.0}}, {0.0, 1.0, 2.0, 3.0});
    const TupleSet t = select_nearest(d, 1);
    REQUIRE(t.size() == 4);
    CHECK(t.second(0) == 2);
    CHECK(t.second(1) == 2);
    for (std::size_t s = 0; s < t.size(); ++s) CHECK(t.norm(s) > kMinTupleDistance);
}

TEST_CASE("nearest selection: n * l tuples and at most l per anchor") {
    std::vector<double> c;
    double b;
    const Dataset d = random_affine(120, 3, 9, c, b);
    for (std::size_t l : {1, 3, 5}) {
        const TupleSet t = select_nearest(d, l);
        CHECK(t.size() == d.size() * l);
        std::vector<std::size_t> per(d.size(), 0);
        for (std::size_t s = 0; s < t.size(); ++s) {
            ++per[t.first(s)];
            CHECK(t.first(s) != t.second(s));
        }
        CHECK(std::all_of(per.begin(), per.end(), [&](std::size_t v) { return v == l; }));
    }
    CHECK_THROWS_AS(select_nearest(table({{0.0}, {1.0}}, {0.0, 1.0}), 2), std::invalid_argument);
}

TEST_CASE("random selection with n = 3, l = 2 uses both partners") {
    const Dataset d = table({{0.0}, {1.0}, {2.0}}, {0.0, 1.0, 4.0});
    const TupleSet t = select_random(d, 2, 17);
    REQUIRE(t.size() == 6);
    for (std::size_t i = 0; i < 3; ++i) {
        std::set<std::size_t> partners;
        for (std::size_t s = 0; s < t.size(); ++s)
            if (t.first(s) == i) partners.insert(t.second(s));
        std::set<std::size_t> expected{0, 1, 2};
        expected.erase(i);
        CHECK(partners == expected);
    }
}

TEST_CASE("random selection is deterministic and distinct") {
    std::vector<double> c;
    double b;
    const Dataset d = random_affine(200, 2, 3, c, b);
    const TupleSet a = select_random(d, 3, 44);
    CHECK(a == select_random(d, 3, 44));
    CHECK_FALSE(a == select_random(d, 3, 45));
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::set<std::size_t> partners;
        for (std::size_t s = 3 * i; s < 3 * i + 3; ++s) {
            CHECK(a.first(s) == i);
            partners.insert(a.second(s));
        }
        CHECK(partners.size() == 3);
        CHECK(partners.count(i) == 0);
    }
    CHECK_THROWS_AS(select_random(d, 0, 1), std::invalid_argument);
}

TEST_CASE("random selection drops a partner that always coincides") {
    // Every other point sits on the anchor, so no usable partner exists.
    const Dataset d = table({{1.0}, {1.0}, {1.0}, {1.0}}, {0.0, 1.0, 2.0, 3.0});
    CHECK(select_random(d, 1, 2).empty());
}

TEST_CASE("random partners are uniform (chi-square at 1%)") {
    const std::size_t n = 2500, l = 3;
    std::vector<double> c;
    double b;
    const Dataset d = random_affine(n, 2, 21, c, b);
    std::vector<double> counts(n, 0.0);
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const TupleSet t = select_random(d, l, static_cast<std::uint64_t>(seed));
        REQUIRE(t.size() == n * l);
        for (std::size_t s = 0; s < t.size(); ++s) counts[t.second(s)] += 1.0;
    }
    const double expected = static_cast<double>(seeds * l);
    double chi2 = 0.0;
    for (const double o : counts) chi2 += (o - expected) * (o - expected) / expected;
    const boost::math::chi_squared dist(static_cast<double>(n - 1));
    CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("affine targets: every data derivative equals c.v / |v|") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::vector<double> c;
        double b;
        const Dataset d = random_affine(150, 1 + seed % 6, seed, c, b);
        for (const TupleSet& t : {select_nearest(d, 3), select_random(d, 3, seed)}) {
            for (std::size_t s = 0; s < t.size(); ++s) {
                const auto v = t.direction(s);
                double dot = 0.0;
                for (std::size_t j = 0; j < v.size(); ++j) dot += c[j] * v[j];
                CHECK(std::abs(t.data_derivative(s) - dot / t.norm(s)) < 1e-10);
            }
        }
    }
}

TEST_CASE("stored geometry matches the rows") {
    std::vector<double> c;
    double b;
    const Dataset d = random_affine(60, 4, 8, c, b);
    const TupleSet t = select_nearest(d, 2);
    for (std::size_t s = 0; s < t.size(); ++s) {
        const auto xi = d.inputs.row(t.first(s));
        const auto xj = d.inputs.row(t.second(s));
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(t.midpoint(s)[j] == (xi[j] + xj[j]) / 2.0);
            CHECK(t.direction(s)[j] == xj[j] - xi[j]);
        }
        const auto full = t.at(s);
        CHECK(full.i == t.first(s));
        CHECK(full.norm == t.norm(s));
    }
}

TEST_CASE("tuple dump csv") {
    const Dataset d = table({{0.0}, {1.0}, {2.0}}, {0.0, 1.0, 4.0});
    std::ostringstream out;
    write_tuples_csv(select_nearest(d, 1), out);
    CHECK(out.str() == "i,j,norm,data_derivative\n0,1,1,1\n1,0,1,-1\n2,1,1,-3\n");
}
