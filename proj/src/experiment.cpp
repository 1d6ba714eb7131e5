#include "dloss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dloss/random.hpp"

namespace dloss {

GridSpec GridSpec::full() {
    GridSpec g;
    g.learning_rates = {0.03, 0.01, 0.003, 0.001};
    g.thetas = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    g.theta_ds = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    g.dropout_ps = {0.05, 0.1, 0.2, 0.4, 0.8};
    g.tuple_counts = {1, 3};
    return g;
}

GridSpec GridSpec::quick() {
    GridSpec g;
    g.learning_rates = {0.03, 0.01, 0.003, 0.001};
    g.regularized_learning_rates = {0.03, 0.01};
    g.thetas = {1e-3, 1e-4, 1e-5};
    g.theta_ds = {1e-3, 1e-4, 1e-5};
    g.dropout_ps = {0.05, 0.1, 0.2};
    g.tuple_counts = {1, 3};
    return g;
}

std::span<const double> GridSpec::learning_rates_for(Method m) const {
    if (m != Method::Std && !regularized_learning_rates.empty()) {
        return regularized_learning_rates;
    }
    return learning_rates;
}

std::size_t GridSpec::size(Method m) const {
    const std::size_t lr = learning_rates_for(m).size();
    switch (m) {
        case Method::Std: return lr;
        case Method::StdL2: return lr * thetas.size();
        case Method::StdDropout: return lr * dropout_ps.size();
        default: return lr * theta_ds.size() * tuple_counts.size();
    }
}

std::vector<TrainConfig> grid_points(Method method, const GridSpec& grid, const TrainConfig& base) {
    std::vector<TrainConfig> points;
    TrainConfig cfg = base;
    cfg.method = method;
    cfg.theta = 0.0;
    cfg.theta_d = 0.0;
    cfg.dropout_p = 0.0;
    for (const double lr : grid.learning_rates_for(method)) {
        cfg.learning_rate = lr;
        switch (method) {
            case Method::Std: points.push_back(cfg); break;
            case Method::StdL2:
                for (const double t : grid.thetas) {
                    cfg.theta = t;
                    points.push_back(cfg);
                }
                break;
            case Method::StdDropout:
                for (const double p : grid.dropout_ps) {
                    cfg.dropout_p = p;
                    points.push_back(cfg);
                }
                break;
            case Method::DlRandom:
            case Method::DlNearest:
                for (const double t : grid.theta_ds) {
                    for (const std::size_t l : grid.tuple_counts) {
                        cfg.theta_d = t;
                        cfg.tuples_per_point = l;
                        points.push_back(cfg);
                    }
                }
                break;
        }
    }
    return points;
}

std::uint64_t run_seed(std::string_view dataset, Method method, std::size_t grid_index, std::size_t fold,
                       std::uint64_t master_seed) {
    std::uint64_t s = combine_seed(master_seed, hash_string(dataset));
    s = combine_seed(s, static_cast<std::uint64_t>(method));
    s = combine_seed(s, grid_index);
    return combine_seed(s, fold);
}

FoldSplit dataset_folds(const Dataset& data, std::size_t fold_count, std::uint64_t master_seed) {
    return make_folds(data.size(), fold_count, combine_seed(master_seed, hash_string(data.name)));
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (const auto v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

FoldOutcome run_fold(const Dataset& data, const FoldSplit& folds, std::size_t fold, const TrainConfig& config) {
    const auto train_rows = folds.train_rows(fold);
    const auto val_rows = folds.validation_rows(fold);
    const auto standardizer = Standardizer::fit(data, train_rows);
    const Dataset train_set = standardizer.apply(data.subset(train_rows));
    const Dataset val_set = standardizer.apply(data.subset(val_rows));
    const RunResult run = train(config, train_set, val_set);
    FoldOutcome out;
    out.fold = fold;
    out.best_mse_train = run.best_mse_train;
    out.best_mse_val = run.best_mse_val;
    out.best_mse_val_raw = run.best_mse_val * standardizer.target_std() * standardizer.target_std();
    out.best_epoch = run.best_epoch;
    out.seconds = run.elapsed_seconds;
    out.curve = run.records;
    return out;
}

namespace {

template <typename Task>
void run_parallel(std::size_t count, std::size_t jobs, Task&& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                task(i);
            }
        });
    }
}

}  // namespace

MethodSummary run_grid(const Dataset& data, Method method, const GridSpec& grid, const ExperimentOptions& options) {
    data.validate();
    const auto points = grid_points(method, grid, options.base);
    if (points.empty()) {
        throw std::invalid_argument("run_grid: empty grid for " + std::string(to_string(method)));
    }
    const FoldSplit folds = dataset_folds(data, options.fold_count, options.master_seed);
    const std::size_t fold_count = options.fold_count;

    MethodSummary summary;
    summary.dataset = data.name;
    summary.method = method;
    summary.grid.resize(points.size());
    std::vector<FoldOutcome> outcomes(points.size() * fold_count);
    std::vector<std::string> errors(outcomes.size());

    run_parallel(outcomes.size(), options.jobs, [&](std::size_t task) {
        const std::size_t g = task / fold_count;
        const std::size_t f = task % fold_count;
        TrainConfig cfg = points[g];
        cfg.seed = run_seed(data.name, method, g, f, options.master_seed);
        try {
            outcomes[task] = run_fold(data, folds, f, cfg);
        } catch (const std::exception& e) {
            errors[task] = "fold " + std::to_string(f) + ": " + e.what();
        }
    });

    bool any_ok = false;
    for (std::size_t g = 0; g < points.size(); ++g) {
        auto& gp = summary.grid[g];
        gp.index = g;
        gp.config = points[g];
        double sum = 0.0;
        for (std::size_t f = 0; f < fold_count; ++f) {
            const std::size_t task = g * fold_count + f;
            if (!errors[task].empty()) {
                gp.failed = true;
                gp.failure += (gp.failure.empty() ? "" : "; ") + errors[task];
                continue;
            }
            sum += outcomes[task].best_mse_val;
            gp.folds.push_back(std::move(outcomes[task]));
        }
        if (gp.failed) {
            continue;
        }
        gp.mean_mse_val = sum / static_cast<double>(fold_count);
        if (!any_ok || gp.mean_mse_val < summary.grid[summary.best_index].mean_mse_val) {
            summary.best_index = g;
        }
        any_ok = true;
    }
    if (!any_ok) {
        throw std::runtime_error("run_grid: every grid point failed for " + data.name + "/" +
                                 std::string(to_string(method)) + " (" + summary.grid.front().failure + ")");
    }

    const auto& best = summary.grid[summary.best_index];
    summary.best_config = best.config;
    std::vector<double> train_vals, val_vals;
    double ep = 0.0, t = 0.0, raw = 0.0;
    for (const auto& fo : best.folds) {
        train_vals.push_back(fo.best_mse_train);
        val_vals.push_back(fo.best_mse_val);
        ep += static_cast<double>(fo.best_epoch);
        t += fo.seconds;
        raw += fo.best_mse_val_raw;
    }
    const double nf = static_cast<double>(fold_count);
    summary.mse_train_mean = std::accumulate(train_vals.begin(), train_vals.end(), 0.0) / nf;
    summary.mse_train_std = sample_std(train_vals);
    summary.mse_val_mean = std::accumulate(val_vals.begin(), val_vals.end(), 0.0) / nf;
    summary.mse_val_std = sample_std(val_vals);
    summary.mse_val_raw_mean = raw / nf;
    summary.ep_mean = ep / nf;
    summary.t_mean = t / nf;
    summary.fold_mse_val = val_vals;
    return summary;
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

RankTable rank_methods(std::span<const std::pair<std::string, std::array<double, kMethodCount>>> mse_val) {
    RankTable table;
    for (const auto& [name, values] : mse_val) {
        std::array<std::size_t, kMethodCount> order{};
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::array<int, kMethodCount> ranks{};
        for (std::size_t r = 0; r < kMethodCount; ++r) {
            ranks[order[r]] = static_cast<int>(r + 1);
        }
        table.datasets.push_back(name);
        table.ranks.push_back(ranks);
    }
    if (!table.ranks.empty()) {
        for (std::size_t m = 0; m < kMethodCount; ++m) {
            double sum = 0.0;
            for (const auto& row : table.ranks) {
                sum += row[m];
            }
            table.average[m] = sum / static_cast<double>(table.ranks.size());
        }
    }
    return table;
}

RankTable rank_methods(std::span<const MethodSummary> summaries) {
    std::vector<std::string> names;
    for (const auto& s : summaries) {
        if (std::find(names.begin(), names.end(), s.dataset) == names.end()) {
            names.push_back(s.dataset);
        }
    }
    std::vector<std::pair<std::string, std::array<double, kMethodCount>>> table;
    for (const auto& name : names) {
        std::array<double, kMethodCount> values{};
        for (std::size_t m = 0; m < kMethodCount; ++m) {
            const auto it = std::find_if(summaries.begin(), summaries.end(), [&](const MethodSummary& s) {
                return s.dataset == name && s.method == kAllMethods[m];
            });
            if (it == summaries.end()) {
                throw std::invalid_argument("rank_methods: dataset '" + name + "' is missing method " +
                                            std::string(to_string(kAllMethods[m])));
            }
            values[m] = it->mse_val_mean;
        }
        table.emplace_back(name, values);
    }
    return rank_methods(table);
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

namespace {

// Shortest representation that reads back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

constexpr std::string_view kResultsHeader =
    "dataset,method,mse_train,sigma_train,mse_val,sigma_val,ep,t,mse_val_raw,fold_mse_val";

}  // namespace

void write_results_csv(std::span<const MethodSummary> summaries, std::ostream& out, bool with_timing) {
    out << kResultsHeader << '\n';
    for (const auto& s : summaries) {
        out << s.dataset << ',' << to_string(s.method) << ',' << fmt(s.mse_train_mean) << ','
            << fmt(s.mse_train_std) << ',' << fmt(s.mse_val_mean) << ',' << fmt(s.mse_val_std) << ','
            << fmt(s.ep_mean) << ',' << fmt(with_timing ? s.t_mean : 0.0) << ',' << fmt(s.mse_val_raw_mean) << ',';
        for (std::size_t f = 0; f < s.fold_mse_val.size(); ++f) {
            out << (f ? ";" : "") << fmt(s.fold_mse_val[f]);
        }
        out << '\n';
    }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("results csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kResultsHeader) {
        throw std::runtime_error("results csv: unexpected header '" + line + "'");
    }
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 10) {
            throw std::runtime_error("results csv: line " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " fields, expected 10");
        }
        try {
            ResultRow r;
            r.dataset = cells[0];
            r.method = parse_method(cells[1]);
            r.mse_train = std::stod(cells[2]);
            r.sigma_train = std::stod(cells[3]);
            r.mse_val = std::stod(cells[4]);
            r.sigma_val = std::stod(cells[5]);
            r.ep = std::stod(cells[6]);
            r.t = std::stod(cells[7]);
            r.mse_val_raw = std::stod(cells[8]);
            for (const auto& v : split(cells[9], ';')) {
                r.fold_mse_val.push_back(std::stod(v));
            }
            rows.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("results csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_best_params_csv(std::span<const MethodSummary> summaries, std::ostream& out) {
    out << "dataset,method,theta,l,theta_D,lambda,p\n";
    for (const auto& s : summaries) {
        const auto& c = s.best_config;
        out << s.dataset << ',' << to_string(s.method) << ',';
        out << (s.method == Method::StdL2 ? fmt(c.theta) : "") << ',';
        out << (uses_tuples(s.method) ? std::to_string(c.tuples_per_point) : "") << ',';
        out << (uses_tuples(s.method) ? fmt(c.theta_d) : "") << ',';
        out << fmt(c.learning_rate) << ',';
        out << (s.method == Method::StdDropout ? fmt(c.dropout_p) : "") << '\n';
    }
}

}  // namespace dloss
