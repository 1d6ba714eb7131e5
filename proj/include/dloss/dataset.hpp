#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dloss/matrix.hpp"

namespace dloss {

enum class DatasetKind { synthetic, real };

/// Regression data: n input rows of width k with one target each.
struct Dataset {
    std::string name;
    Matrix inputs;
    std::vector<double> targets;
    DatasetKind kind = DatasetKind::real;

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t features() const noexcept { return inputs.cols(); }

    /// Throws std::invalid_argument when n < 2, k < 1, shapes disagree or a
    /// value is non-finite.
    void validate() const;

    Dataset subset(std::span<const std::size_t> rows) const;
};

// ---------------------------------------------------------------------------
// Synthetic generators. All inputs are drawn from U[0,1]^k and targets are
// noiseless.
//
//   friedman1            k=10  y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5
//   regression1          k=1   y = c . x,  c ~ 100 N(0,1) drawn once per seed
//   regression10         k=10  as regression1, all ten features informative
//   sparse_uncorrelated  k=10  y = x1 + 2 x2 - 2 x3 - 1.5 x4
//   swiss_roll           k=3   t = 1.5 pi (1 + 2 s), raw point (t cos t, 21 u, t sin t)
//                              mapped affinely into [0,1]^3, target t
// ---------------------------------------------------------------------------
enum class Generator { friedman1, regression1, regression10, sparse_uncorrelated, swiss_roll };

inline constexpr Generator kAllGenerators[] = {Generator::friedman1, Generator::regression1,
                                               Generator::regression10, Generator::sparse_uncorrelated,
                                               Generator::swiss_roll};

Generator parse_generator(std::string_view name);
std::string_view to_string(Generator g) noexcept;
std::size_t generator_features(Generator g) noexcept;

double friedman1(std::span<const double> x);
double sparse_uncorrelated(std::span<const double> x);
/// Coefficient vector used by regression1/regression10 for the given seed.
std::vector<double> regression_coefficients(std::size_t k, std::uint64_t seed);

Dataset generate_synthetic(Generator generator, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV ingestion: UTF-8, comma separated, header row, '.' decimal point.
// ---------------------------------------------------------------------------
enum class RowPolicy { reject_file, skip_row };

struct CsvSchema {
    std::string target;
    /// Empty means every column except the target, in file order.
    std::vector<std::string> features;
    RowPolicy policy = RowPolicy::reject_file;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::string name = {});
Dataset parse_csv(std::istream& in, const CsvSchema& schema, std::string name = {});

/// Writes header x1..xk,y followed by one row per sample, full precision.
void write_csv(const Dataset& data, std::ostream& out);

// ---------------------------------------------------------------------------
// Cross-validation folds.
// ---------------------------------------------------------------------------
struct FoldSplit {
    std::size_t fold_count = 0;
    std::vector<std::size_t> assignments;

    std::vector<std::size_t> train_rows(std::size_t fold) const;
    std::vector<std::size_t> validation_rows(std::size_t fold) const;
    std::size_t fold_size(std::size_t fold) const;
};

FoldSplit make_folds(std::size_t n, std::size_t fold_count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Z-score standardization fitted on training rows (population std; constant
// columns get std 1).
// ---------------------------------------------------------------------------
class Standardizer {
public:
    static Standardizer fit(const Dataset& data, std::span<const std::size_t> train_rows);

    Dataset apply(const Dataset& data) const;
    void apply_row(std::span<double> row) const;
    double apply_target(double y) const noexcept { return (y - target_mean_) / target_std_; }

    void invert_row(std::span<double> row) const;
    double invert_target(double z) const noexcept { return z * target_std_ + target_mean_; }

    std::span<const double> input_means() const noexcept { return input_means_; }
    std::span<const double> input_stds() const noexcept { return input_stds_; }
    double target_mean() const noexcept { return target_mean_; }
    double target_std() const noexcept { return target_std_; }

private:
    std::vector<double> input_means_;
    std::vector<double> input_stds_;
    double target_mean_ = 0.0;
    double target_std_ = 1.0;
};

}  // namespace dloss
