#include "dloss/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dloss/random.hpp"

namespace dloss {

MLPParams::MLPParams(std::size_t inputs, std::size_t hidden)
    : inputs_(inputs), hidden_(hidden), values_(hidden * inputs + 2 * hidden + 1, 0.0) {
    if (inputs == 0 || hidden == 0) {
        throw std::invalid_argument("MLPParams: inputs and hidden must be positive");
    }
}

std::string MLPParams::describe(std::size_t index) const {
    const std::size_t w = hidden_ * inputs_;
    if (index < w) {
        return "hidden_weights[" + std::to_string(index / inputs_) + "," + std::to_string(index % inputs_) + "]";
    }
    if (index < w + hidden_) {
        return "hidden_biases[" + std::to_string(index - w) + "]";
    }
    if (index < w + 2 * hidden_) {
        return "output_weights[" + std::to_string(index - w - hidden_) + "]";
    }
    return "output_bias";
}

MLPParams init_params(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
    MLPParams p(inputs, hidden);
    auto rng = make_rng(seed, Stream::init);
    const double hidden_bound = std::sqrt(6.0 / static_cast<double>(inputs));
    const double output_bound = std::sqrt(6.0 / static_cast<double>(hidden));
    std::uniform_real_distribution<double> hw(-hidden_bound, hidden_bound);
    std::uniform_real_distribution<double> ow(-output_bound, output_bound);
    for (auto& w : p.hidden_weights()) {
        w = hw(rng);
    }
    for (auto& w : p.output_weights()) {
        w = ow(rng);
    }
    return p;
}

namespace {

// Fills pre (size hidden) with the preactivations and returns f(x).
inline double forward_with_preactivations(const MLPParams& p, std::span<const double> x, std::span<double> pre,
                                          std::span<const double> scale) {
    const std::size_t k = p.inputs();
    const std::size_t hidden = p.hidden();
    const double* w = p.hidden_weights().data();
    const auto b = p.hidden_biases();
    const auto wo = p.output_weights();
    double out = p.output_bias();
    for (std::size_t h = 0; h < hidden; ++h) {
        double z = b[h];
        const double* wh = w + h * k;
        for (std::size_t c = 0; c < k; ++c) {
            z += wh[c] * x[c];
        }
        pre[h] = z;
        if (z > 0.0) {
            out += wo[h] * (scale.empty() ? z : scale[h] * z);
        }
    }
    return out;
}

// grad += weight * df/dbeta at x, given x's preactivations.
inline void accumulate_point_gradient(const MLPParams& p, std::span<const double> x, std::span<const double> pre,
                                      std::span<const double> scale, double weight, ParamGradient& grad) {
    const std::size_t k = p.inputs();
    const std::size_t hidden = p.hidden();
    const auto wo = p.output_weights();
    double* gw = grad.hidden_weights().data();
    auto gb = grad.hidden_biases();
    auto gwo = grad.output_weights();
    for (std::size_t h = 0; h < hidden; ++h) {
        const double z = pre[h];
        if (!(z > 0.0)) {
            continue;
        }
        const double s = scale.empty() ? 1.0 : scale[h];
        if (s == 0.0) {
            continue;
        }
        gwo[h] += weight * s * z;
        const double delta = weight * wo[h] * s;
        gb[h] += delta;
        double* gwh = gw + h * k;
        for (std::size_t c = 0; c < k; ++c) {
            gwh[c] += delta * x[c];
        }
    }
    grad.output_bias() += weight;
}

void check_width(const MLPParams& p, std::size_t width) {
    if (width != p.inputs()) {
        throw std::invalid_argument("model: input width " + std::to_string(width) + " != " +
                                    std::to_string(p.inputs()));
    }
}

}  // namespace

double forward(const MLPParams& params, std::span<const double> x) {
    check_width(params, x.size());
    std::vector<double> pre(params.hidden());
    return forward_with_preactivations(params, x, pre, {});
}

std::vector<double> forward_batch(const MLPParams& params, const Matrix& inputs) {
    std::vector<double> out(inputs.rows());
    if (inputs.rows() == 0) {
        return out;
    }
    check_width(params, inputs.cols());
    std::vector<double> pre(params.hidden());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        out[r] = forward_with_preactivations(params, inputs.row(r), pre, {});
    }
    return out;
}

double directional_derivative_fdm(const MLPParams& params, std::span<const double> x,
                                  std::span<const double> unit_direction, double epsilon) {
    check_width(params, x.size());
    check_width(params, unit_direction.size());
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("directional_derivative_fdm: epsilon must be positive");
    }
    double ss = 0.0;
    for (const auto v : unit_direction) {
        ss += v * v;
    }
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-8) {
        throw std::invalid_argument("directional_derivative_fdm: direction is not unit length");
    }
    const std::size_t k = x.size();
    std::vector<double> plus(k), minus(k), pre(params.hidden());
    for (std::size_t c = 0; c < k; ++c) {
        plus[c] = x[c] + epsilon * unit_direction[c];
        minus[c] = x[c] - epsilon * unit_direction[c];
    }
    const double f_plus = forward_with_preactivations(params, plus, pre, {});
    const double f_minus = forward_with_preactivations(params, minus, pre, {});
    return (f_plus - f_minus) / (2.0 * epsilon);
}

LossGradient grad_mse(const MLPParams& params, const Matrix& inputs, std::span<const double> targets,
                      std::span<const double> hidden_scale) {
    const std::size_t n = inputs.rows();
    if (n == 0) {
        throw std::invalid_argument("grad_mse: empty batch");
    }
    if (targets.size() != n) {
        throw std::invalid_argument("grad_mse: target count mismatch");
    }
    if (!hidden_scale.empty() && hidden_scale.size() != params.hidden()) {
        throw std::invalid_argument("grad_mse: hidden scale size mismatch");
    }
    check_width(params, inputs.cols());
    LossGradient out{0.0, ParamGradient(params.inputs(), params.hidden())};
    std::vector<double> pre(params.hidden());
    const double inv_n = 1.0 / static_cast<double>(n);
    double sse = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = inputs.row(r);
        const double residual = forward_with_preactivations(params, x, pre, hidden_scale) - targets[r];
        sse += residual * residual;
        accumulate_point_gradient(params, x, pre, hidden_scale, 2.0 * residual * inv_n, out.grad);
    }
    out.value = sse * inv_n;
    return out;
}

LossGradient grad_dloss(const MLPParams& params, const TupleSet& tuples, double epsilon) {
    if (tuples.empty()) {
        throw std::invalid_argument("grad_dloss: empty tuple set");
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("grad_dloss: epsilon must be positive");
    }
    check_width(params, tuples.features());
    const std::size_t k = params.inputs();
    const std::size_t count = tuples.size();
    LossGradient out{0.0, ParamGradient(params.inputs(), params.hidden())};
    std::vector<double> plus(k), minus(k), pre_plus(params.hidden()), pre_minus(params.hidden());
    const double inv_count = 1.0 / static_cast<double>(count);
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
        const auto m = tuples.midpoint(s);
        const auto v = tuples.direction(s);
        const double step = epsilon / tuples.norm(s);
        for (std::size_t c = 0; c < k; ++c) {
            plus[c] = m[c] + step * v[c];
            minus[c] = m[c] - step * v[c];
        }
        const double f_plus = forward_with_preactivations(params, plus, pre_plus, {});
        const double f_minus = forward_with_preactivations(params, minus, pre_minus, {});
        const double dd = (f_plus - f_minus) / (2.0 * epsilon) - tuples.data_derivative(s);
        sum_sq += dd * dd;
        // d(dd^2)/dbeta / count = 2 dd (grad f+ - grad f-) / (2 eps count)
        const double weight = dd * inv_count / epsilon;
        accumulate_point_gradient(params, plus, pre_plus, {}, weight, out.grad);
        accumulate_point_gradient(params, minus, pre_minus, {}, -weight, out.grad);
    }
    out.value = sum_sq * inv_count;
    return out;
}

double evaluate_mse(const MLPParams& params, const Matrix& inputs, std::span<const double> targets) {
    const std::size_t n = inputs.rows();
    if (n == 0 || targets.size() != n) {
        throw std::invalid_argument("evaluate_mse: empty batch or target count mismatch");
    }
    check_width(params, inputs.cols());
    std::vector<double> pre(params.hidden());
    double sse = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double residual = forward_with_preactivations(params, inputs.row(r), pre, {}) - targets[r];
        sse += residual * residual;
    }
    return sse / static_cast<double>(n);
}

void save_params(const MLPParams& params, std::ostream& out) {
    out << "inputs,hidden\n" << params.inputs() << ',' << params.hidden() << "\nvalue\n";
    char buf[32];
    for (const auto v : params.values()) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << '\n';
    }
}

MLPParams load_params(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "inputs,hidden") {
        throw std::runtime_error("load_params: missing shape header");
    }
    std::size_t inputs = 0, hidden = 0;
    char comma = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_params: missing shape");
    }
    std::istringstream shape(line);
    if (!(shape >> inputs >> comma >> hidden) || comma != ',') {
        throw std::runtime_error("load_params: malformed shape '" + line + "'");
    }
    if (!std::getline(in, line) || line != "value") {
        throw std::runtime_error("load_params: missing value header");
    }
    MLPParams p(inputs, hidden);
    for (auto& v : p.values()) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("load_params: expected " + std::to_string(p.size()) + " values");
        }
        v = std::stod(line);
    }
    return p;
}

void save_params(const MLPParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_params: cannot write '" + path.string() + "'");
    }
    save_params(params, out);
}

MLPParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_params: cannot open '" + path.string() + "'");
    }
    return load_params(in);
}

}  // namespace dloss
