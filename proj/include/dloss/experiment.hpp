#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dloss/dataset.hpp"
#include "dloss/trainer.hpp"

namespace dloss {

/// Hyperparameter values searched per method. Only the axes a method uses
/// enter its grid: STD uses learning rates; STD_L2 adds thetas; STD_DO adds
/// dropout probabilities; DL methods add theta_d and tuples per point.
struct GridSpec {
    std::vector<double> learning_rates;
    std::vector<double> thetas;
    std::vector<double> theta_ds;
    std::vector<double> dropout_ps;
    std::vector<std::size_t> tuple_counts;
    /// Learning rates for the regularized methods; empty means learning_rates.
    std::vector<double> regularized_learning_rates;

    /// Full protocol grid.
    static GridSpec full();
    /// Desk-scale grid: all four learning rates for STD; two learning rates
    /// and three regularizer weights (both tuple counts) for the others.
    static GridSpec quick();

    std::span<const double> learning_rates_for(Method m) const;
    /// Number of grid points a method expands to.
    std::size_t size(Method m) const;
};

/// Every grid point for a method, in a fixed enumeration order, on top of
/// base (epochs, hidden width, epsilon, L2 form).
std::vector<TrainConfig> grid_points(Method method, const GridSpec& grid, const TrainConfig& base);

struct ExperimentOptions {
    std::size_t fold_count = 5;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
    TrainConfig base;  // epochs, hidden, epsilon, l2_form
    bool quick = false;
};

/// Deterministic per-run seed from (dataset, method, grid point, fold, master).
std::uint64_t run_seed(std::string_view dataset, Method method, std::size_t grid_index, std::size_t fold,
                       std::uint64_t master_seed);

/// Folds are shared by every method on a dataset so comparisons are paired.
FoldSplit dataset_folds(const Dataset& data, std::size_t fold_count, std::uint64_t master_seed);

struct FoldOutcome {
    std::size_t fold = 0;
    double best_mse_train = 0.0;
    double best_mse_val = 0.0;
    double best_mse_val_raw = 0.0;  // in original target units
    std::size_t best_epoch = 0;
    double seconds = 0.0;
    std::vector<EpochRecord> curve;
};

struct GridPointOutcome {
    std::size_t index = 0;
    TrainConfig config;
    std::vector<FoldOutcome> folds;  // ordered by fold
    bool failed = false;
    std::string failure;
    double mean_mse_val = 0.0;
};

struct MethodSummary {
    std::string dataset;
    Method method = Method::Std;
    double mse_train_mean = 0.0;
    double mse_train_std = 0.0;
    double mse_val_mean = 0.0;
    double mse_val_std = 0.0;
    double mse_val_raw_mean = 0.0;
    double ep_mean = 0.0;
    double t_mean = 0.0;
    TrainConfig best_config;
    std::size_t best_index = 0;
    std::vector<double> fold_mse_val;  // winning grid point, ordered by fold
    std::vector<GridPointOutcome> grid;
};

/// Sample standard deviation (n - 1); zero for fewer than two values.
double sample_std(std::span<const double> values);

/// Runs every (grid point x fold) task, picks the grid point with the lowest
/// mean best validation MSE. Throws std::runtime_error if every grid point
/// failed.
MethodSummary run_grid(const Dataset& data, Method method, const GridSpec& grid, const ExperimentOptions& options);

/// One training run on one fold: standardize on the training rows, build
/// tuples if needed, train, extract the best values.
FoldOutcome run_fold(const Dataset& data, const FoldSplit& folds, std::size_t fold, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMethodCount = 5;

struct RankTable {
    std::vector<std::string> datasets;
    std::vector<std::array<int, kMethodCount>> ranks;  // indexed like kAllMethods
    std::array<double, kMethodCount> average{};
};

/// Ranks methods per dataset by ascending mse_val; ties go to the earlier
/// method in kAllMethods order.
RankTable rank_methods(std::span<const std::pair<std::string, std::array<double, kMethodCount>>> mse_val);
RankTable rank_methods(std::span<const MethodSummary> summaries);

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

/// dataset,method,mse_train,sigma_train,mse_val,sigma_val,ep,t,mse_val_raw,fold_mse_val
/// fold_mse_val lists the per-fold values separated by ';'.
void write_results_csv(std::span<const MethodSummary> summaries, std::ostream& out, bool with_timing = true);

struct ResultRow {
    std::string dataset;
    Method method = Method::Std;
    double mse_train = 0.0;
    double sigma_train = 0.0;
    double mse_val = 0.0;
    double sigma_val = 0.0;
    double ep = 0.0;
    double t = 0.0;
    double mse_val_raw = 0.0;
    std::vector<double> fold_mse_val;
};

std::vector<ResultRow> read_results_csv(std::istream& in);

/// dataset,method,theta,l,theta_D,lambda,p with inactive fields left empty.
void write_best_params_csv(std::span<const MethodSummary> summaries, std::ostream& out);

}  // namespace dloss
