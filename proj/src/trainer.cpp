#include "dloss/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "dloss/random.hpp"

namespace dloss {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Std: return "STD";
        case Method::StdL2: return "STD_L2";
        case Method::StdDropout: return "STD_DO";
        case Method::DlRandom: return "DL_RND";
        case Method::DlNearest: return "DL_NN";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (const auto m : kAllMethods) {
        if (to_string(m) == name) {
            return m;
        }
    }
    if (name == "STD+L2") return Method::StdL2;
    if (name == "STD+DO") return Method::StdDropout;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool uses_tuples(Method m) noexcept {
    return m == Method::DlRandom || m == Method::DlNearest;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(theta >= 0.0)) fail("theta must be non-negative");
    if (!(theta_d >= 0.0)) fail("theta_d must be non-negative");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must lie in [0, 1)");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (epochs == 0) fail("epochs must be positive");
    if (hidden == 0) fail("hidden must be positive");
    if (uses_tuples(method) && tuples_per_point == 0) fail("tuples_per_point must be positive");
}

std::optional<TupleSet> build_tuples(const TrainConfig& config, const Dataset& train) {
    switch (config.method) {
        case Method::DlNearest: return select_nearest(train, config.tuples_per_point);
        case Method::DlRandom: return select_random(train, config.tuples_per_point, config.seed);
        default: return std::nullopt;
    }
}

namespace {

void check_loss(std::size_t epoch, std::string_view what, double value) {
    if (!std::isfinite(value) || value > kDivergenceLimit) {
        throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch) + ": " +
                                         std::string(what) + " = " + std::to_string(value));
    }
}

void add_scaled(ParamGradient& into, const ParamGradient& from, double weight) {
    auto a = into.values();
    const auto b = from.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += weight * b[i];
    }
}

}  // namespace

RunResult train(const TrainConfig& config, const Dataset& train, const Dataset& val, const TupleSet* tuples,
                const TrainHooks& hooks) {
    config.validate();
    if (train.size() == 0 || val.size() == 0) {
        throw std::invalid_argument("train: empty training or validation set");
    }
    if (train.features() != val.features()) {
        throw std::invalid_argument("train: training and validation feature counts differ");
    }
    std::optional<TupleSet> owned;
    if (uses_tuples(config.method) && tuples == nullptr) {
        owned = build_tuples(config, train);
        tuples = &*owned;
    }
    if (uses_tuples(config.method) && tuples->empty()) {
        throw std::invalid_argument("train: DLoss method with an empty tuple set");
    }

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();

    RunResult result;
    result.params = init_params(train.features(), config.hidden, config.seed);
    AdamState adam(result.params);
    auto dropout_rng = make_rng(config.seed, Stream::dropout);
    result.records.reserve(config.epochs);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        LossGradient total;
        if (config.method == Method::StdDropout) {
            const auto mask = DropoutMask::sample(config.hidden, config.dropout_p, dropout_rng);
            total = grad_mse(result.params, train.inputs, train.targets, mask.scales());
        } else {
            total = grad_mse(result.params, train.inputs, train.targets);
        }
        rec.objective_mse = total.value;
        if (config.method == Method::StdL2) {
            const auto l2 = l2_term(result.params, config.theta, config.l2_form);
            rec.penalty = l2.value;
            add_scaled(total.grad, l2.grad, 1.0);
        } else if (uses_tuples(config.method)) {
            const auto dl = grad_dloss(result.params, *tuples, config.epsilon);
            rec.penalty = config.theta_d * dl.value;
            add_scaled(total.grad, dl.grad, config.theta_d);
        }
        rec.total_loss = rec.objective_mse + rec.penalty;
        check_loss(epoch, "training loss", rec.total_loss);

        try {
            adam_step(result.params, total.grad, adam, config.learning_rate);
        } catch (const std::domain_error& e) {
            throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (hooks.on_epoch) {
            hooks.on_epoch(epoch, result.params);
        }

        rec.mse_train = evaluate_mse(result.params, train.inputs, train.targets);
        rec.mse_val = evaluate_mse(result.params, val.inputs, val.targets);
        check_loss(epoch, "mse_train", rec.mse_train);
        check_loss(epoch, "mse_val", rec.mse_val);
        rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        result.records.push_back(rec);
    }

    result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.best_mse_train = result.records.front().mse_train;
    result.best_mse_val = result.records.front().mse_val;
    result.best_epoch = 1;
    for (const auto& rec : result.records) {
        result.best_mse_train = std::min(result.best_mse_train, rec.mse_train);
        if (rec.mse_val < result.best_mse_val) {
            result.best_mse_val = rec.mse_val;
            result.best_epoch = rec.epoch;
        }
    }
    return result;
}

void write_curve_csv(std::span<const EpochRecord> records, std::ostream& out, bool with_timing) {
    out << "epoch,mse_train,mse_val,seconds\n";
    char buf[96];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.6g", r.mse_train, r.mse_val, with_timing ? r.seconds : 0.0);
        out << r.epoch << ',' << buf << '\n';
    }
}

}  // namespace dloss
