#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dloss/dataset.hpp"
#include "dloss/model.hpp"
#include "dloss/optim.hpp"
#include "dloss/tuples.hpp"

namespace dloss {

/// Training variants; exactly one regularizer is active per method.
enum class Method { Std, StdL2, StdDropout, DlRandom, DlNearest };

inline constexpr Method kAllMethods[] = {Method::Std, Method::StdL2, Method::StdDropout, Method::DlRandom,
                                         Method::DlNearest};

/// "STD", "STD_L2", "STD_DO", "DL_RND", "DL_NN".
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);
bool uses_tuples(Method m) noexcept;

struct TrainConfig {
    Method method = Method::Std;
    double learning_rate = 0.01;
    double theta = 0.0;       // L2 weight
    double theta_d = 0.0;     // DLoss weight
    double dropout_p = 0.0;
    std::size_t tuples_per_point = 1;
    double epsilon = 1e-3;    // FDM step for the model derivative
    std::size_t epochs = 250;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    L2Form l2_form = L2Form::norm;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mse_train = 0.0;  // evaluation mode, after the step
    double mse_val = 0.0;
    double seconds = 0.0;    // cumulative wall time
    // Objective at which this epoch's gradient was taken (before the step).
    double objective_mse = 0.0;
    double penalty = 0.0;    // weighted regularizer term
    double total_loss = 0.0;
};

struct RunResult {
    std::vector<EpochRecord> records;
    double best_mse_train = 0.0;
    double best_mse_val = 0.0;
    std::size_t best_epoch = 0;  // first epoch reaching best_mse_val
    double elapsed_seconds = 0.0;
    MLPParams params;
};

/// Thrown when a loss becomes non-finite or exceeds kDivergenceLimit.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

inline constexpr double kDivergenceLimit = 1e12;

struct TrainHooks {
    /// Called after every optimizer step with the updated parameters.
    std::function<void(std::size_t epoch, const MLPParams&)> on_epoch;
};

/// Builds the tuple set a DL method trains with (empty optional otherwise).
std::optional<TupleSet> build_tuples(const TrainConfig& config, const Dataset& train);

/// Full-batch training: per epoch one gradient of the total loss, one Adam
/// step, then evaluation-mode MSE on both sets. Both datasets are expected to
/// be standardized already. tuples may be null for DL methods, in which case
/// they are built from train.
RunResult train(const TrainConfig& config, const Dataset& train, const Dataset& val,
                const TupleSet* tuples = nullptr, const TrainHooks& hooks = {});

/// Learning curve CSV: epoch,mse_train,mse_val,seconds.
void write_curve_csv(std::span<const EpochRecord> records, std::ostream& out, bool with_timing = true);

}  // namespace dloss
