#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dloss::stats {

enum class Sidedness { two_sided, greater, less };
enum class TestKind { wilcoxon, shapiro_wilk, t_paired };

std::string_view to_string(Sidedness s) noexcept;
std::string_view to_string(TestKind k) noexcept;

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    TestKind kind = TestKind::wilcoxon;
    Sidedness sidedness = Sidedness::two_sided;
    bool exact = false;
};

/// Largest sample size (after dropping zeros) for the exact signed-rank null
/// distribution; beyond it a tie- and continuity-corrected normal
/// approximation is used.
inline constexpr std::size_t kWilcoxonExactLimit = 20;

enum class WilcoxonMode { automatic, exact, normal };

/// Wilcoxon signed-rank test on paired differences a - b. Zero differences
/// are dropped and tied |d| get average ranks; the statistic is W+, the rank
/// sum of the positive differences. `greater` tests whether a tends to exceed
/// b. Throws std::invalid_argument if every difference is zero.
TestResult wilcoxon_signed_rank(std::span<const double> differences, Sidedness sidedness,
                                WilcoxonMode mode = WilcoxonMode::automatic);

/// Shapiro-Wilk W and p-value (Royston's AS R94 approximation), 3 <= n <= 5000.
/// Throws std::invalid_argument for a constant sample or n out of range.
TestResult shapiro_wilk(std::span<const double> sample);

/// Paired t-test on differences, m - 1 degrees of freedom. Throws on m < 2 or
/// zero variance.
TestResult paired_t_test(std::span<const double> differences, Sidedness sidedness);

/// Student t cumulative distribution function.
double student_t_cdf(double t, double dof);
/// Standard normal cumulative distribution function.
double normal_cdf(double z);

double median(std::span<const double> values);

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::size_t count = 0;
};

/// Equal-width bins over [min, max]; the last bin is closed on the right.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins);

}  // namespace dloss::stats
