#include "dloss/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dloss {

AdamState::AdamState(const MLPParams& shape, AdamConfig config)
    : config_(config), first_(shape.size(), 0.0), second_(shape.size(), 0.0) {}

void adam_step(MLPParams& params, const ParamGradient& grad, AdamState& state, double learning_rate) {
    if (!params.same_shape(grad) || state.first_.size() != params.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("adam_step: learning rate must be positive");
    }
    const auto g = grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) {
            throw std::domain_error("adam_step: non-finite gradient in " + grad.describe(i));
        }
    }
    const auto& cfg = state.config_;
    ++state.step_count_;
    const double t = static_cast<double>(state.step_count_);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    auto p = params.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.first_[i] = cfg.beta1 * state.first_[i] + (1.0 - cfg.beta1) * g[i];
        state.second_[i] = cfg.beta2 * state.second_[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = state.first_[i] / correction1;
        const double v_hat = state.second_[i] / correction2;
        p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

LossGradient l2_term(const MLPParams& params, double theta, L2Form form) {
    if (!(theta >= 0.0)) {
        throw std::invalid_argument("l2_term: theta must be non-negative");
    }
    LossGradient out{0.0, ParamGradient(params.inputs(), params.hidden())};
    if (theta == 0.0) {
        return out;
    }
    double ss = 0.0;
    for (const auto v : params.values()) {
        ss += v * v;
    }
    auto g = out.grad.values();
    const auto p = params.values();
    if (form == L2Form::squared) {
        out.value = theta * ss;
        for (std::size_t i = 0; i < p.size(); ++i) {
            g[i] = 2.0 * theta * p[i];
        }
        return out;
    }
    const double norm = std::sqrt(ss);
    out.value = theta * norm;
    if (norm > 0.0) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            g[i] = theta * p[i] / norm;
        }
    }
    return out;
}

DropoutMask::DropoutMask(std::vector<bool> keep, double p) : p_(p), keep_(std::move(keep)) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("dropout: p must lie in [0, 1), got " + std::to_string(p));
    }
    const double scale = 1.0 / (1.0 - p);
    scales_.reserve(keep_.size());
    for (const bool k : keep_) {
        scales_.push_back(k ? scale : 0.0);
    }
}

DropoutMask DropoutMask::sample(std::size_t hidden, double p, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("dropout: p must lie in [0, 1), got " + std::to_string(p));
    }
    std::bernoulli_distribution keep(1.0 - p);
    std::vector<bool> flags(hidden);
    for (std::size_t h = 0; h < hidden; ++h) {
        flags[h] = p == 0.0 ? true : keep(rng);
    }
    return DropoutMask(std::move(flags), p);
}

DropoutMask DropoutMask::from_flags(std::vector<bool> keep, double p) {
    return DropoutMask(std::move(keep), p);
}

std::vector<double> DropoutMask::apply(std::span<const double> activations) const {
    if (activations.size() != scales_.size()) {
        throw std::invalid_argument("dropout: activation count mismatch");
    }
    std::vector<double> out(activations.size());
    for (std::size_t h = 0; h < out.size(); ++h) {
        out[h] = activations[h] * scales_[h];
    }
    return out;
}

std::vector<double> apply_dropout(std::span<const double> activations, double p, Rng& rng) {
    return DropoutMask::sample(activations.size(), p, rng).apply(activations);
}

}  // namespace dloss
