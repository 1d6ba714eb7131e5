#include "dloss/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace dloss::stats {

std::string_view to_string(Sidedness s) noexcept {
    switch (s) {
        case Sidedness::two_sided: return "two_sided";
        case Sidedness::greater: return "greater";
        case Sidedness::less: return "less";
    }
    return "?";
}

std::string_view to_string(TestKind k) noexcept {
    switch (k) {
        case TestKind::wilcoxon: return "wilcoxon";
        case TestKind::shapiro_wilk: return "shapiro_wilk";
        case TestKind::t_paired: return "t_paired";
    }
    return "?";
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) {
        throw std::invalid_argument("student_t_cdf: dof must be positive");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    // P(|T| > |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    const double tail = 0.5 * boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t));
    return t >= 0.0 ? 1.0 - tail : tail;
}

double median(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median: empty sample");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank
// ---------------------------------------------------------------------------

TestResult wilcoxon_signed_rank(std::span<const double> differences, Sidedness sidedness, WilcoxonMode mode) {
    std::vector<double> d;
    for (const double v : differences) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("wilcoxon_signed_rank: non-finite difference");
        }
        if (v != 0.0) {
            d.push_back(v);
        }
    }
    const std::size_t m = d.size();
    if (m == 0) {
        throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero");
    }

    // Doubled average ranks of |d| are integers: 2 * mean(first..last) = first + last.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<std::uint64_t> rank2(m);
    double tie_term = 0.0;
    for (std::size_t lo = 0; lo < m;) {
        std::size_t hi = lo;
        while (hi + 1 < m && std::abs(d[order[hi + 1]]) == std::abs(d[order[lo]])) {
            ++hi;
        }
        for (std::size_t p = lo; p <= hi; ++p) {
            rank2[order[p]] = (lo + 1) + (hi + 1);
        }
        const double t = static_cast<double>(hi - lo + 1);
        tie_term += t * t * t - t;
        lo = hi + 1;
    }
    std::uint64_t w2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (d[i] > 0.0) {
            w2 += rank2[i];
        }
    }

    TestResult r;
    r.kind = TestKind::wilcoxon;
    r.sidedness = sidedness;
    r.statistic = 0.5 * static_cast<double>(w2);

    const bool exact = mode == WilcoxonMode::exact || (mode == WilcoxonMode::automatic && m <= kWilcoxonExactLimit);
    if (exact) {
        if (m > 62) {
            throw std::invalid_argument("wilcoxon_signed_rank: exact mode limited to 62 differences");
        }
        // counts[s]: sign patterns whose doubled positive rank sum equals s.
        std::uint64_t total2 = 0;
        for (const auto r2 : rank2) {
            total2 += r2;
        }
        std::vector<std::uint64_t> counts(total2 + 1, 0);
        counts[0] = 1;
        std::uint64_t reach = 0;
        for (const auto r2 : rank2) {
            reach += r2;
            for (std::uint64_t s = reach; s >= r2; --s) {
                counts[s] += counts[s - r2];
                if (s == r2) {
                    break;
                }
            }
        }
        const double patterns = std::ldexp(1.0, static_cast<int>(m));
        std::uint64_t upper = 0, lower = 0;
        for (std::uint64_t s = 0; s <= total2; ++s) {
            if (s >= w2) upper += counts[s];
            if (s <= w2) lower += counts[s];
        }
        const double p_upper = static_cast<double>(upper) / patterns;
        const double p_lower = static_cast<double>(lower) / patterns;
        switch (sidedness) {
            case Sidedness::greater: r.p_value = p_upper; break;
            case Sidedness::less: r.p_value = p_lower; break;
            case Sidedness::two_sided: r.p_value = std::min(1.0, 2.0 * std::min(p_upper, p_lower)); break;
        }
        r.exact = true;
        return r;
    }

    const double mm = static_cast<double>(m);
    const double mean = mm * (mm + 1.0) / 4.0;
    const double var = mm * (mm + 1.0) * (2.0 * mm + 1.0) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var);
    const double dev = r.statistic - mean;
    switch (sidedness) {
        case Sidedness::greater: r.p_value = 1.0 - normal_cdf((dev - 0.5) / sd); break;
        case Sidedness::less: r.p_value = normal_cdf((dev + 0.5) / sd); break;
        case Sidedness::two_sided:
            r.p_value = 2.0 * (1.0 - normal_cdf(std::max(0.0, std::abs(dev) - 0.5) / sd));
            break;
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk, AS R94 (complete samples)
// ---------------------------------------------------------------------------

namespace {

// c[0] + c[1] x + ... + c[n-1] x^(n-1)
double poly(std::span<const double> c, double x) {
    double result = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        result = result * x + c[i];
    }
    return result;
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace

TestResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) {
        throw std::invalid_argument("shapiro_wilk: sample size must lie in [3, 5000], got " + std::to_string(n));
    }
    std::vector<double> x(sample.begin(), sample.end());
    for (const double v : x) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("shapiro_wilk: non-finite value");
        }
    }
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (!(range > 1e-19 * std::max(1.0, std::abs(x.front())))) {
        throw std::invalid_argument("shapiro_wilk: constant sample");
    }

    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double g[] = {-2.273, 0.459};

    const double an = static_cast<double>(n);
    const std::size_t half = n / 2;

    // Coefficients for the upper half of the order statistics.
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::numbers::sqrt2 / 2.0;
    } else {
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            a[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, rsn) - a[0] / ssumm2;
        std::size_t first_scaled = 0;
        double fac = 0.0;
        if (n > 5) {
            const double a2 = -a[1] / ssumm2 + poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[0] = a1;
            a[1] = a2;
            first_scaled = 2;
        } else {
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
            a[0] = a1;
            first_scaled = 1;
        }
        for (std::size_t i = first_scaled; i < half; ++i) {
            a[i] = -a[i] / fac;
        }
    }

    // W as the squared correlation between the coefficient vector and the
    // range-scaled order statistics.
    std::vector<double> coef(n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        coef[i] = -a[i];
        coef[n - 1 - i] = a[i];
    }
    double sa = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += coef[i];
        sx += x[i] / range;
    }
    sa /= an;
    sx /= an;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double asa = coef[i] - sa;
        const double xsx = x[i] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    const double w = 1.0 - w1;

    TestResult r;
    r.kind = TestKind::shapiro_wilk;
    r.sidedness = Sidedness::two_sided;
    r.statistic = w;

    if (n == 3) {
        constexpr double pi6 = 6.0 / std::numbers::pi;
        constexpr double stqr = std::numbers::pi / 3.0;
        r.p_value = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
        r.exact = true;
        return r;
    }

    double y = std::log(w1);
    const double lxx = std::log(an);
    double m = 0.0, s = 1.0;
    if (n <= 11) {
        const double gamma = poly(g, an);
        if (y >= gamma) {
            r.p_value = 1e-19;
            return r;
        }
        y = -std::log(gamma - y);
        m = poly(c3, an);
        s = std::exp(poly(c4, an));
    } else {
        m = poly(c5, lxx);
        s = std::exp(poly(c6, lxx));
    }
    r.p_value = std::clamp(1.0 - normal_cdf((y - m) / s), 0.0, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Paired t-test
// ---------------------------------------------------------------------------

TestResult paired_t_test(std::span<const double> differences, Sidedness sidedness) {
    const std::size_t m = differences.size();
    if (m < 2) {
        throw std::invalid_argument("paired_t_test: need at least 2 differences");
    }
    const double mm = static_cast<double>(m);
    const double mean = std::accumulate(differences.begin(), differences.end(), 0.0) / mm;
    double ss = 0.0;
    for (const double v : differences) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / (mm - 1.0));
    if (!(sd > 0.0)) {
        throw std::invalid_argument("paired_t_test: zero variance");
    }
    const double t = mean / (sd / std::sqrt(mm));
    const double dof = mm - 1.0;
    TestResult r;
    r.kind = TestKind::t_paired;
    r.sidedness = sidedness;
    r.statistic = t;
    switch (sidedness) {
        case Sidedness::greater: r.p_value = 1.0 - student_t_cdf(t, dof); break;
        case Sidedness::less: r.p_value = student_t_cdf(t, dof); break;
        case Sidedness::two_sided:
            r.p_value = boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t));
            break;
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
    if (values.empty()) {
        throw std::invalid_argument("histogram: empty sample");
    }
    if (bins == 0) {
        throw std::invalid_argument("histogram: bin count must be positive");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].left = lo + width * static_cast<double>(b);
        out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (const double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        out[std::min(b, bins - 1)].count++;
    }
    return out;
}

}  // namespace dloss::stats
