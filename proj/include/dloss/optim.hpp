#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dloss/model.hpp"
#include "dloss/random.hpp"

namespace dloss {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam moment estimates for one parameter vector.
class AdamState {
public:
    explicit AdamState(const MLPParams& shape, AdamConfig config = {});

    const AdamConfig& config() const noexcept { return config_; }
    std::size_t step_count() const noexcept { return step_count_; }
    std::span<const double> first_moment() const noexcept { return first_; }
    std::span<const double> second_moment() const noexcept { return second_; }

private:
    friend void adam_step(MLPParams&, const ParamGradient&, AdamState&, double);

    AdamConfig config_;
    std::size_t step_count_ = 0;
    std::vector<double> first_;
    std::vector<double> second_;
};

/// One Adam update in place. Throws std::domain_error naming the offending
/// parameter if the gradient has a non-finite entry; nothing is modified then.
void adam_step(MLPParams& params, const ParamGradient& grad, AdamState& state, double learning_rate);

/// theta * |beta|_2 (norm) or theta * |beta|_2^2 (squared).
enum class L2Form { norm, squared };

/// Penalty value and its gradient. For the norm form the gradient at beta = 0
/// is taken as zero.
LossGradient l2_term(const MLPParams& params, double theta, L2Form form = L2Form::norm);

/// Per-hidden-neuron keep flags for one training step. scales() holds
/// 1/(1-p) for kept neurons and 0 for dropped ones (inverted dropout).
class DropoutMask {
public:
    static DropoutMask sample(std::size_t hidden, double p, Rng& rng);
    static DropoutMask from_flags(std::vector<bool> keep, double p);

    double drop_probability() const noexcept { return p_; }
    const std::vector<bool>& keep() const noexcept { return keep_; }
    std::span<const double> scales() const noexcept { return scales_; }

    std::vector<double> apply(std::span<const double> activations) const;

private:
    DropoutMask(std::vector<bool> keep, double p);

    double p_ = 0.0;
    std::vector<bool> keep_;
    std::vector<double> scales_;
};

/// Samples a fresh mask and applies it. p must lie in [0, 1).
std::vector<double> apply_dropout(std::span<const double> activations, double p, Rng& rng);

}  // namespace dloss
