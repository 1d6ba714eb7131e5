#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dloss/matrix.hpp"
#include "dloss/tuples.hpp"

namespace dloss {

/// Parameters of f(x) = sum_h w_o[h] * relu(w_h . x + b_h) + b_o.
///
/// Stored flat as [hidden weights (hidden x inputs, row-major) | hidden biases
/// | output weights | output bias]; optimizers work on values() directly.
class MLPParams {
public:
    MLPParams() = default;
    MLPParams(std::size_t inputs, std::size_t hidden);

    std::size_t inputs() const noexcept { return inputs_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> hidden_weights() noexcept { return {values_.data(), hidden_ * inputs_}; }
    std::span<const double> hidden_weights() const noexcept { return {values_.data(), hidden_ * inputs_}; }
    std::span<double> hidden_weight_row(std::size_t h) noexcept { return {values_.data() + h * inputs_, inputs_}; }
    std::span<const double> hidden_weight_row(std::size_t h) const noexcept {
        return {values_.data() + h * inputs_, inputs_};
    }
    std::span<double> hidden_biases() noexcept { return {values_.data() + hidden_ * inputs_, hidden_}; }
    std::span<const double> hidden_biases() const noexcept { return {values_.data() + hidden_ * inputs_, hidden_}; }
    std::span<double> output_weights() noexcept { return {values_.data() + hidden_ * (inputs_ + 1), hidden_}; }
    std::span<const double> output_weights() const noexcept {
        return {values_.data() + hidden_ * (inputs_ + 1), hidden_};
    }
    double& output_bias() noexcept { return values_.back(); }
    double output_bias() const noexcept { return values_.back(); }

    /// Human readable name of a flat index, e.g. "hidden_weights[3,1]".
    std::string describe(std::size_t index) const;

    bool same_shape(const MLPParams& other) const noexcept {
        return inputs_ == other.inputs_ && hidden_ == other.hidden_;
    }

    friend bool operator==(const MLPParams&, const MLPParams&) = default;

private:
    std::size_t inputs_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> values_;
};

/// dLoss/dbeta, laid out exactly like MLPParams.
using ParamGradient = MLPParams;

struct LossGradient {
    double value = 0.0;
    ParamGradient grad;
};

/// He-style uniform init: hidden weights ~ U(-sqrt(6/inputs), +), output
/// weights ~ U(-sqrt(6/hidden), +), biases zero.
MLPParams init_params(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

double forward(const MLPParams& params, std::span<const double> x);
std::vector<double> forward_batch(const MLPParams& params, const Matrix& inputs);

/// Central difference (f(x + eps u) - f(x - eps u)) / (2 eps) along a unit
/// direction u.
double directional_derivative_fdm(const MLPParams& params, std::span<const double> x,
                                  std::span<const double> unit_direction, double epsilon);

/// Mean squared error over the rows and its gradient. A non-empty
/// hidden_scale multiplies each hidden activation (dropout during training).
LossGradient grad_mse(const MLPParams& params, const Matrix& inputs, std::span<const double> targets,
                      std::span<const double> hidden_scale = {});

/// Mean squared derivative difference over the tuple set and its gradient,
/// using two forward and two backward passes per tuple.
LossGradient grad_dloss(const MLPParams& params, const TupleSet& tuples, double epsilon);

double evaluate_mse(const MLPParams& params, const Matrix& inputs, std::span<const double> targets);

void save_params(const MLPParams& params, std::ostream& out);
MLPParams load_params(std::istream& in);
void save_params(const MLPParams& params, const std::filesystem::path& path);
MLPParams load_params(const std::filesystem::path& path);

}  // namespace dloss
