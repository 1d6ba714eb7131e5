#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "dloss/stats.hpp"

using namespace dloss::stats;

namespace {

// Exact signed-rank p-values by enumerating all 2^m sign patterns.
struct BruteWilcoxon {
    double upper = 0.0;  // P(W+ >= observed)
    double lower = 0.0;  // P(W+ <= observed)
    double statistic = 0.0;
};

BruteWilcoxon brute_wilcoxon(std::vector<double> d) {
    d.erase(std::remove(d.begin(), d.end(), 0.0), d.end());
    const std::size_t m = d.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        while (j + 1 < m && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = (static_cast<double>(i + j) + 2.0) / 2.0;
        i = j + 1;
    }
    BruteWilcoxon out;
    for (std::size_t i = 0; i < m; ++i)
        if (d[i] > 0) out.statistic += rank[i];
    std::size_t up = 0, lo = 0;
    const std::size_t patterns = std::size_t{1} << m;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1U) w += rank[i];
        up += w >= out.statistic;
        lo += w <= out.statistic;
    }
    out.upper = static_cast<double>(up) / static_cast<double>(patterns);
    out.lower = static_cast<double>(lo) / static_cast<double>(patterns);
    return out;
}

struct SwFixture {
    std::vector<double> x;
    double w;
    double p;
};

// Reference values from scipy.stats.shapiro.
const std::vector<SwFixture>& sw_fixtures() {
    static const std::vector<SwFixture> f = {
        {{0.647906, 0.469321, -0.643021}, 0.8514996166772936, 0.2444688493145698},
        {{-1.178259, -0.14469, 1.203458, 1.333584}, 0.8915399088866572, 0.39026320923341834},
        {{0.908301, 0.346564, 1.600035, 1.23284, -0.220318}, 0.973540342284815, 0.8974518681229021},
        {{-1.061965, -0.364569, -0.420019, 0.687509, -1.899116, -0.191369, 1.671222}, 0.9721855937414859,
         0.9137346235514643},
        {{-0.920284, -0.758464, -0.084261, -1.417821, -0.129613, -0.015653, -0.004655, -0.988514, -0.36583, 0.653818,
          -0.714551},
         0.9665092853368977, 0.8492810458690805},
        {{0.547197, 0.655512, -1.427001, -0.645306, 0.655313, 0.493495, 0.179375, -0.348618, 0.108559, 1.874773,
          -0.221455, 0.57965},
         0.9486052982382595, 0.6166922451867833},
        {{-0.416748, -0.198326, 0.648027, -0.929002, -0.242417, -0.610308, -0.858708, 0.175753, 1.239823, 0.221407,
          -0.381767, -1.45112, 0.818957, 0.210459, -0.631314, 0.861436, 1.574229, -1.631653, 0.590327, 0.845853},
         0.9783932262207236, 0.9117034701091157},
        {{0.580529, 1.601762, 0.625378, -0.903532, 3.800128, 0.146192, 1.482107, 1.966109, 0.88145, -1.798108,
          -1.703972, -0.6776, 0.034065, -1.388827, -0.937152, -0.44509, -0.475107, 0.188615, 0.072571, -0.038764,
          -0.617708, -0.832397, -1.910916, 1.267488, 0.195471},
         0.9487437060320449, 0.23485940818547152},
        {{0.369518, -1.717359, 0.751157, -0.088026, 0.968344, -0.686173, 0.998357, 1.439397, -0.169561, -0.304528,
          -0.400295, 0.13563, 2.739998, -0.047523, 0.650616, -1.48249, -2.327723, 0.160648, -0.098664, 1.219113,
          -2.33342, 0.416071, -1.753412, 1.757931, 0.760704, -0.977145, 0.729737, 0.891049, 0.117914, 1.54395,
          0.974289, -0.078886, -0.434833, 0.735179, -0.610223, -2.622842, -0.369662, -1.739919, 1.016516, 0.10523,
          0.585471, 1.173064, -0.033144, -0.017338, 0.447326, 2.388668, -0.208565, -0.416719, 0.128204, 0.755471},
         0.9662683590556328, 0.16253066804156874},
        // exp(1.5 z), heavily right-skewed
        {{1.001847, 1.565364, 0.66285, 0.262925, 0.505602, 0.225944, 1.09441, 7.465727, 0.477921, 0.394273, 2.084988,
          1.708013, 1.171308, 0.247659, 0.957071, 2.837589, 0.133144, 0.503373, 0.057738, 0.144524, 0.063127,
          0.702832, 0.149394, 1.502149, 1.265069},
         0.6105903938115269, 5.629875282534976e-07},
    };
    return f;
}

}  // namespace

TEST_CASE("wilcoxon: five positive differences, one-sided") {
    const std::vector<double> d{0.3, 1.2, 0.7, 2.0, 0.1};
    const TestResult r = wilcoxon_signed_rank(d, Sidedness::greater);
    CHECK(r.p_value == 0.03125);
    CHECK(r.statistic == 15.0);
    CHECK(r.exact);
    CHECK(wilcoxon_signed_rank(d, Sidedness::two_sided).p_value == 0.0625);
}

TEST_CASE("wilcoxon: symmetric differences sit at the centre") {
    const std::vector<double> d{1.0, -1.0, 2.0, -2.0};
    const TestResult r = wilcoxon_signed_rank(d, Sidedness::two_sided);
    CHECK(r.p_value == 1.0);
    CHECK(r.statistic == 5.0);
}

TEST_CASE("wilcoxon: zeros are dropped and all-zero input is an error") {
    const std::vector<double> with_zero{0.0, 0.3, 1.2, 0.7, 2.0, 0.1, 0.0};
    CHECK(wilcoxon_signed_rank(with_zero, Sidedness::greater).p_value == 0.03125);
    CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{0.0, 0.0}, Sidedness::greater), std::invalid_argument);
}

TEST_CASE("wilcoxon: exact path equals sign enumeration for m <= 12") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.2, 1.0);
    for (std::size_t m = 1; m <= 12; ++m) {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> d(m);
            // Coarse rounding produces ties and zeros.
            for (double& v : d) v = std::round(g(rng) * (rep % 2 ? 2.0 : 1000.0)) / 2.0;
            if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = 1.0;
            const BruteWilcoxon b = brute_wilcoxon(d);
            CAPTURE(m);
            CHECK(wilcoxon_signed_rank(d, Sidedness::greater, WilcoxonMode::exact).p_value == b.upper);
            CHECK(wilcoxon_signed_rank(d, Sidedness::less, WilcoxonMode::exact).p_value == b.lower);
            CHECK(wilcoxon_signed_rank(d, Sidedness::two_sided, WilcoxonMode::exact).p_value ==
                  std::min(1.0, 2.0 * std::min(b.upper, b.lower)));
            CHECK(wilcoxon_signed_rank(d, Sidedness::greater).statistic == b.statistic);
        }
    }
}

TEST_CASE("wilcoxon: normal approximation agrees with exact at m = 20") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.3, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> d(20);
        for (double& v : d) v = g(rng);
        for (const Sidedness s : {Sidedness::greater, Sidedness::less, Sidedness::two_sided}) {
            const double exact = wilcoxon_signed_rank(d, s, WilcoxonMode::exact).p_value;
            const double approx = wilcoxon_signed_rank(d, s, WilcoxonMode::normal).p_value;
            CHECK(std::abs(exact - approx) < 0.01);
        }
    }
}

TEST_CASE("wilcoxon: normal approximation with ties matches the reference") {
    // scipy.stats.wilcoxon(method="approx", correction=True); two zeros dropped.
    const std::vector<double> d{-0.0, 1.0, 0.9, 1.6, 0.2, -0.3, 1.6, -0.0, -0.8, 0.4, -0.6, 0.8, -0.2,
                                -1.0, 0.3, -0.2, 1.4, 1.3, -0.2, 0.7, -0.4, 1.0, 0.8, 0.7, 0.8};
    const TestResult g = wilcoxon_signed_rank(d, Sidedness::greater);
    CHECK_FALSE(g.exact);
    CHECK(g.statistic == 215.0);
    CHECK(g.p_value == doctest::Approx(0.00988934757105365).epsilon(1e-9));
    CHECK(wilcoxon_signed_rank(d, Sidedness::less).p_value == doctest::Approx(0.9908867440714797).epsilon(1e-9));
    CHECK(wilcoxon_signed_rank(d, Sidedness::two_sided).p_value ==
          doctest::Approx(0.0197786951421073).epsilon(1e-9));
}

TEST_CASE("shapiro-wilk: published AS R94 example") {
    const std::vector<double> x{.139, .157, .175, .256, .344, .413, .503, .577, .614, .655, .954, 1.392, 1.557,
                                1.648, 1.690, 1.994, 2.174, 2.206, 3.245, 3.510, 3.571, 4.354, 4.980, 6.084, 8.351};
    const TestResult r = shapiro_wilk(x);
    CHECK(r.statistic == doctest::Approx(0.83467).epsilon(1e-5));
    CHECK(r.p_value == doctest::Approx(0.000914).epsilon(0.005));
}

TEST_CASE("shapiro-wilk: reference fixtures") {
    for (const auto& f : sw_fixtures()) {
        const TestResult r = shapiro_wilk(f.x);
        CAPTURE(f.x.size());
        CHECK(r.statistic == doctest::Approx(f.w).epsilon(1e-6));
        CHECK(r.p_value == doctest::Approx(f.p).epsilon(1e-4));
    }
    CHECK(shapiro_wilk(sw_fixtures().back().x).p_value < 0.05);
}

TEST_CASE("shapiro-wilk: expected normal order statistics give W > 0.99") {
    std::vector<double> x;
    for (int i = 1; i <= 25; ++i) {
        // Blom scores, inverted by bisection
        const double q = (i - 0.375) / 25.25;
        double lo = -10.0, hi = 10.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (normal_cdf(mid) < q ? lo : hi) = mid;
        }
        x.push_back(0.5 * (lo + hi));
    }
    CHECK(shapiro_wilk(x).statistic > 0.99);
}

TEST_CASE("shapiro-wilk: bounds, affine invariance and errors") {
    std::mt19937_64 rng(4);
    std::exponential_distribution<double> e(1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(3 + rep * 7);
        for (double& v : x) v = e(rng);
        const TestResult r = shapiro_wilk(x);
        CHECK(r.statistic > 0.0);
        CHECK(r.statistic <= 1.0);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
        std::vector<double> y = x;
        for (double& v : y) v = -3.5 * v + 100.0;
        CHECK(std::abs(shapiro_wilk(y).statistic - r.statistic) < 1e-10);
    }
    CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 1.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(5001, 1.0)), std::invalid_argument);
}

TEST_CASE("paired t-test") {
    const TestResult r = paired_t_test(std::vector<double>{1.0, 2.0, 3.0}, Sidedness::two_sided);
    CHECK(r.statistic == doctest::Approx(3.4641016151377544));
    CHECK(r.p_value == doctest::Approx(0.07417990022744853).epsilon(1e-10));

    const TestResult zero = paired_t_test(std::vector<double>{-1.0, 1.0, -2.0, 2.0}, Sidedness::two_sided);
    CHECK(zero.statistic == 0.0);
    CHECK(zero.p_value == doctest::Approx(1.0));

    // scipy.stats.ttest_1samp
    const std::vector<double> d{-0.6878, -0.0797, -1.2913, -1.2375, 0.4622, 1.227, 1.0634, -0.5415, -0.2123};
    CHECK(paired_t_test(d, Sidedness::two_sided).statistic == doctest::Approx(-0.4733247427469902));
    CHECK(paired_t_test(d, Sidedness::two_sided).p_value == doctest::Approx(0.6486279726818829).epsilon(1e-10));
    CHECK(paired_t_test(d, Sidedness::greater).p_value == doctest::Approx(0.6756860136590586).epsilon(1e-10));
    CHECK(paired_t_test(d, Sidedness::less).p_value == doctest::Approx(0.32431398634094144).epsilon(1e-10));

    CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0, 1.0, 1.0, 1.0}, Sidedness::two_sided),
                    std::invalid_argument);
    CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, Sidedness::two_sided), std::invalid_argument);
}

TEST_CASE("paired t-test: negation maps one-sided p to its complement") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.1, 1.0);
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<double> d(2 + rep % 30);
        for (double& v : d) v = g(rng);
        std::vector<double> neg = d;
        for (double& v : neg) v = -v;
        const double p = paired_t_test(d, Sidedness::greater).p_value;
        CHECK(paired_t_test(neg, Sidedness::greater).p_value == doctest::Approx(1.0 - p).epsilon(1e-12));
        CHECK(paired_t_test(neg, Sidedness::less).p_value == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("student t cdf and normal cdf") {
    CHECK(student_t_cdf(0.0, 5.0) == doctest::Approx(0.5));
    // t with 1 dof is Cauchy: F(1) = 3/4.
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75));
    CHECK(student_t_cdf(-1.0, 1.0) == doctest::Approx(0.25));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975));
}

TEST_CASE("median") {
    CHECK(median(std::vector<double>{1.0, 2.0, 3.0}) == 2.0);
    CHECK(median(std::vector<double>{4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median(std::vector<double>{7.0, 7.0, 7.0}) == 7.0);
    CHECK_THROWS_AS(median(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("histogram counts every value once") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> v(25);
    for (double& x : v) x = g(rng);
    const auto bins = histogram(v, 7);
    REQUIRE(bins.size() == 7);
    std::size_t total = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        total += bins[i].count;
        if (i > 0) CHECK(bins[i].left == bins[i - 1].right);
    }
    CHECK(total == v.size());
    CHECK(bins.front().left == *std::min_element(v.begin(), v.end()));
    CHECK(bins.back().right == *std::max_element(v.begin(), v.end()));

    const auto flat = histogram(std::vector<double>{2.0, 2.0}, 3);
    std::size_t flat_total = 0;
    for (const auto& b : flat) flat_total += b.count;
    CHECK(flat_total == 2);
}
