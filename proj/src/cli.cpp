#include "dloss/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dloss/random.hpp"

namespace dloss::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
    throw ManifestError("manifest: " + field + ": " + message);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
        schema_error(where.empty() ? "<root>" : where, "expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            schema_error(where.empty() ? key : where + "." + key, "unknown field");
        }
    }
}

std::size_t get_count(const json& v, const std::string& field, std::size_t min_value) {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
        schema_error(field, "expected an integer >= " + std::to_string(min_value));
    }
    return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& v, const std::string& field) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        schema_error(field, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

double get_positive(const json& v, const std::string& field) {
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
        schema_error(field, "expected a positive number");
    }
    return v.get<double>();
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string() || v.get<std::string>().empty()) {
        schema_error(field, "expected a non-empty string");
    }
    return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) {
        schema_error(field, "expected true or false");
    }
    return v.get<bool>();
}

std::vector<double> get_reals(const json& v, const std::string& field, bool allow_zero) {
    if (!v.is_array() || v.empty()) {
        schema_error(field, "expected a non-empty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string item = field + "[" + std::to_string(i) + "]";
        if (!v[i].is_number()) {
            schema_error(item, "expected a number");
        }
        const double x = v[i].get<double>();
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
            schema_error(item, allow_zero ? "expected a non-negative number" : "expected a positive number");
        }
        out.push_back(x);
    }
    return out;
}

std::vector<std::size_t> get_counts(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) {
        schema_error(field, "expected a non-empty array of integers");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(get_count(v[i], field + "[" + std::to_string(i) + "]", 1));
    }
    return out;
}

DatasetSource parse_dataset(const json& entry, const std::string& where, std::size_t default_rows,
                            std::uint64_t master_seed, const fs::path& base_dir) {
    DatasetSource src;
    if (entry.is_string()) {
        try {
            src.generator = parse_generator(entry.get<std::string>());
        } catch (const std::exception&) {
            schema_error(where, "unknown generator '" + entry.get<std::string>() + "'");
        }
        src.name = std::string(to_string(*src.generator));
        src.n = default_rows;
        src.seed = combine_seed(master_seed, hash_string(src.name));
        return src;
    }
    check_keys(entry, where, {"name", "generator", "n", "seed", "csv", "target", "features", "on_bad_row"});
    const bool has_gen = entry.contains("generator");
    const bool has_csv = entry.contains("csv");
    if (has_gen == has_csv) {
        schema_error(where, "exactly one of 'generator' or 'csv' is required");
    }
    if (has_gen) {
        const std::string gen = get_string(entry["generator"], where + ".generator");
        try {
            src.generator = parse_generator(gen);
        } catch (const std::exception&) {
            schema_error(where + ".generator", "unknown generator '" + gen + "'");
        }
        for (const char* key : {"target", "features", "on_bad_row"}) {
            if (entry.contains(key)) {
                schema_error(where + "." + key, "only valid for csv datasets");
            }
        }
        src.name = entry.contains("name") ? get_string(entry["name"], where + ".name")
                                          : std::string(to_string(*src.generator));
        src.n = entry.contains("n") ? get_count(entry["n"], where + ".n", 2) : default_rows;
        src.seed = entry.contains("seed") ? get_seed(entry["seed"], where + ".seed")
                                          : combine_seed(master_seed, hash_string(src.name));
        return src;
    }
    const fs::path csv = get_string(entry["csv"], where + ".csv");
    src.csv = csv.is_absolute() || base_dir.empty() ? csv : base_dir / csv;
    if (!entry.contains("target")) {
        schema_error(where + ".target", "required for csv datasets");
    }
    src.schema.target = get_string(entry["target"], where + ".target");
    if (entry.contains("features")) {
        const json& f = entry["features"];
        if (!f.is_array()) {
            schema_error(where + ".features", "expected an array of column names");
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            src.schema.features.push_back(get_string(f[i], where + ".features[" + std::to_string(i) + "]"));
        }
    }
    if (entry.contains("on_bad_row")) {
        const std::string policy = get_string(entry["on_bad_row"], where + ".on_bad_row");
        if (policy == "reject") {
            src.schema.policy = RowPolicy::reject_file;
        } else if (policy == "skip") {
            src.schema.policy = RowPolicy::skip_row;
        } else {
            schema_error(where + ".on_bad_row", "expected 'reject' or 'skip'");
        }
    }
    for (const char* key : {"n", "seed"}) {
        if (entry.contains(key)) {
            schema_error(where + "." + key, "only valid for generated datasets");
        }
    }
    src.name = entry.contains("name") ? get_string(entry["name"], where + ".name") : csv.stem().string();
    return src;
}

}  // namespace

ExperimentManifest parse_manifest(const json& doc, const ManifestOverrides& overrides, const fs::path& base_dir) {
    check_keys(doc, "", {"datasets", "methods", "grid", "fold_count", "epochs", "hidden", "epsilon", "l2_form", "seed",
                         "output_dir", "quick", "timing", "jobs"});
    ExperimentManifest m;
    m.quick = overrides.quick || (doc.contains("quick") && get_bool(doc["quick"], "quick"));
    m.seed = overrides.seed ? *overrides.seed : doc.contains("seed") ? get_seed(doc["seed"], "seed") : 0;
    m.epochs = doc.contains("epochs") ? get_count(doc["epochs"], "epochs", 1) : m.quick ? kQuickEpochs : 250;
    if (doc.contains("fold_count")) m.fold_count = get_count(doc["fold_count"], "fold_count", 2);
    if (doc.contains("hidden")) m.hidden = get_count(doc["hidden"], "hidden", 1);
    if (doc.contains("epsilon")) m.epsilon = get_positive(doc["epsilon"], "epsilon");
    if (doc.contains("output_dir")) m.output_dir = get_string(doc["output_dir"], "output_dir");
    m.timing = !overrides.no_timing && (!doc.contains("timing") || get_bool(doc["timing"], "timing"));
    m.jobs = overrides.jobs ? *overrides.jobs : doc.contains("jobs") ? get_count(doc["jobs"], "jobs", 1) : 1;
    if (m.jobs == 0) {
        schema_error("jobs", "expected an integer >= 1");
    }
    if (doc.contains("l2_form")) {
        const std::string form = get_string(doc["l2_form"], "l2_form");
        if (form == "norm") {
            m.l2_form = L2Form::norm;
        } else if (form == "squared") {
            m.l2_form = L2Form::squared;
        } else {
            schema_error("l2_form", "expected 'norm' or 'squared'");
        }
    }

    m.grid = m.quick ? GridSpec::quick() : GridSpec::full();
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        check_keys(g, "grid", {"learning_rates", "thetas", "theta_ds", "dropout_ps", "tuple_counts",
                               "regularized_learning_rates"});
        if (g.contains("learning_rates")) {
            m.grid.learning_rates = get_reals(g["learning_rates"], "grid.learning_rates", false);
            if (!g.contains("regularized_learning_rates")) {
                m.grid.regularized_learning_rates.clear();
            }
        }
        if (g.contains("regularized_learning_rates")) {
            m.grid.regularized_learning_rates =
                get_reals(g["regularized_learning_rates"], "grid.regularized_learning_rates", false);
        }
        if (g.contains("thetas")) m.grid.thetas = get_reals(g["thetas"], "grid.thetas", true);
        if (g.contains("theta_ds")) m.grid.theta_ds = get_reals(g["theta_ds"], "grid.theta_ds", true);
        if (g.contains("dropout_ps")) {
            m.grid.dropout_ps = get_reals(g["dropout_ps"], "grid.dropout_ps", true);
            for (std::size_t i = 0; i < m.grid.dropout_ps.size(); ++i) {
                if (m.grid.dropout_ps[i] >= 1.0) {
                    schema_error("grid.dropout_ps[" + std::to_string(i) + "]", "expected a value in [0, 1)");
                }
            }
        }
        if (g.contains("tuple_counts")) m.grid.tuple_counts = get_counts(g["tuple_counts"], "grid.tuple_counts");
    }

    if (doc.contains("methods")) {
        const json& ms = doc["methods"];
        if (!ms.is_array() || ms.empty()) {
            schema_error("methods", "expected a non-empty array of method names");
        }
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const std::string field = "methods[" + std::to_string(i) + "]";
            const std::string name = get_string(ms[i], field);
            Method method;
            try {
                method = parse_method(name);
            } catch (const std::exception&) {
                schema_error(field, "unknown method '" + name + "'");
            }
            if (std::find(m.methods.begin(), m.methods.end(), method) != m.methods.end()) {
                schema_error(field, "duplicate method '" + name + "'");
            }
            m.methods.push_back(method);
        }
    } else {
        m.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    }

    if (!doc.contains("datasets") || !doc["datasets"].is_array() || doc["datasets"].empty()) {
        schema_error("datasets", "expected a non-empty array");
    }
    const std::size_t default_rows = m.quick ? kQuickSyntheticRows : kDefaultSyntheticRows;
    std::set<std::string> names;
    for (std::size_t i = 0; i < doc["datasets"].size(); ++i) {
        const std::string where = "datasets[" + std::to_string(i) + "]";
        DatasetSource src = parse_dataset(doc["datasets"][i], where, default_rows, m.seed, base_dir);
        if (!names.insert(src.name).second) {
            schema_error(where + ".name", "duplicate dataset name '" + src.name + "'");
        }
        m.datasets.push_back(std::move(src));
    }
    return m;
}

ExperimentManifest load_manifest(const fs::path& path, const ManifestOverrides& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ManifestError("manifest: cannot open " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ManifestError("manifest: " + path.string() + ": " + e.what());
    }
    return parse_manifest(doc, overrides, path.parent_path());
}

json to_json(const ExperimentManifest& m) {
    json doc;
    json datasets = json::array();
    for (const auto& src : m.datasets) {
        json d;
        d["name"] = src.name;
        if (src.generator) {
            d["generator"] = std::string(to_string(*src.generator));
            d["n"] = src.n;
            d["seed"] = src.seed;
        } else {
            d["csv"] = fs::absolute(src.csv).lexically_normal().string();
            d["target"] = src.schema.target;
            if (!src.schema.features.empty()) {
                d["features"] = src.schema.features;
            }
            d["on_bad_row"] = src.schema.policy == RowPolicy::skip_row ? "skip" : "reject";
        }
        datasets.push_back(std::move(d));
    }
    doc["datasets"] = std::move(datasets);
    json methods = json::array();
    for (const Method method : m.methods) {
        methods.push_back(std::string(to_string(method)));
    }
    doc["methods"] = std::move(methods);
    json grid;
    grid["learning_rates"] = m.grid.learning_rates;
    if (!m.grid.regularized_learning_rates.empty()) {
        grid["regularized_learning_rates"] = m.grid.regularized_learning_rates;
    }
    grid["thetas"] = m.grid.thetas;
    grid["theta_ds"] = m.grid.theta_ds;
    grid["dropout_ps"] = m.grid.dropout_ps;
    grid["tuple_counts"] = m.grid.tuple_counts;
    doc["grid"] = std::move(grid);
    doc["fold_count"] = m.fold_count;
    doc["epochs"] = m.epochs;
    doc["hidden"] = m.hidden;
    doc["epsilon"] = m.epsilon;
    doc["l2_form"] = m.l2_form == L2Form::squared ? "squared" : "norm";
    doc["seed"] = m.seed;
    doc["output_dir"] = m.output_dir;
    doc["quick"] = m.quick;
    doc["timing"] = m.timing;
    doc["jobs"] = m.jobs;
    return doc;
}

fs::path resolve_output_dir(const std::optional<std::string>& flag, const ExperimentManifest& manifest) {
    if (flag && !flag->empty()) {
        return *flag;
    }
    if (const char* env = std::getenv("DLOSS_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return manifest.output_dir;
}

Dataset load_dataset(const DatasetSource& source) {
    if (source.generator) {
        Dataset data = generate_synthetic(*source.generator, source.n, source.seed);
        data.name = source.name;
        return data;
    }
    if (!fs::exists(source.csv)) {
        throw std::runtime_error("dataset '" + source.name + "': missing file " + source.csv.string());
    }
    return load_csv(source.csv, source.schema, source.name);
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

}  // namespace

void cmd_gen_data(Generator generator, std::size_t n, std::uint64_t seed, const fs::path& out_path, std::ostream& log,
                  const std::optional<TupleDump>& dump) {
    const Dataset data = generate_synthetic(generator, n, seed);
    auto out = open_out(out_path);
    write_csv(data, out);
    finish(out, out_path);
    log << "wrote " << out_path.string() << ": " << data.size() << " rows, " << data.features() + 1 << " columns\n";
    if (dump) {
        const TupleSet tuples = dump->selection == Selection::random ? select_random(data, dump->l, seed)
                                                                     : select_nearest(data, dump->l);
        auto tout = open_out(dump->path);
        write_tuples_csv(tuples, tout);
        finish(tout, dump->path);
        log << "wrote " << dump->path.string() << ": " << tuples.size() << " tuples\n";
    }
}

RunReport cmd_run(const ExperimentManifest& manifest, const fs::path& out_dir, std::ostream& log) {
    RunReport report;
    report.out_dir = out_dir;
    std::vector<Dataset> datasets;
    for (const auto& src : manifest.datasets) {
        datasets.push_back(load_dataset(src));
    }
    fs::create_directories(out_dir / "curves");
    {
        const fs::path path = out_dir / "manifest.json";
        auto out = open_out(path);
        out << to_json(manifest).dump(2) << '\n';
        finish(out, path);
    }

    ExperimentOptions options;
    options.fold_count = manifest.fold_count;
    options.master_seed = manifest.seed;
    options.jobs = manifest.jobs;
    options.quick = manifest.quick;
    options.base.epochs = manifest.epochs;
    options.base.hidden = manifest.hidden;
    options.base.epsilon = manifest.epsilon;
    options.base.l2_form = manifest.l2_form;

    for (const Dataset& data : datasets) {
        for (const Method method : manifest.methods) {
            log << data.name << " " << to_string(method) << ": " << manifest.grid.size(method) << " grid points x "
                << manifest.fold_count << " folds\n";
            MethodSummary summary;
            try {
                summary = run_grid(data, method, manifest.grid, options);
            } catch (const std::exception& e) {
                report.failures.push_back(data.name + " " + std::string(to_string(method)) + ": " + e.what());
                continue;
            }
            for (const auto& point : summary.grid) {
                if (point.failed) {
                    report.failures.push_back(data.name + " " + std::string(to_string(method)) + " grid " +
                                              std::to_string(point.index) + ": " + point.failure);
                }
                for (const auto& fold : point.folds) {
                    if (fold.curve.empty()) {
                        continue;
                    }
                    const fs::path path = out_dir / "curves" /
                                          (data.name + "__" + std::string(to_string(method)) + "__g" +
                                           std::to_string(point.index) + "__f" + std::to_string(fold.fold) + ".csv");
                    auto out = open_out(path);
                    write_curve_csv(fold.curve, out, manifest.timing);
                    finish(out, path);
                    ++report.curve_files;
                }
            }
            log << "  best mse_val " << fmt(summary.mse_val_mean) << " (grid " << summary.best_index << ")\n";
            report.summaries.push_back(std::move(summary));
        }
    }

    {
        const fs::path path = out_dir / "results.csv";
        auto out = open_out(path);
        write_results_csv(report.summaries, out, manifest.timing);
        finish(out, path);
    }
    {
        const fs::path path = out_dir / "best_params.csv";
        auto out = open_out(path);
        write_best_params_csv(report.summaries, out);
        finish(out, path);
    }
    std::set<Method> ran;
    for (const auto& s : report.summaries) ran.insert(s.method);
    if (ran.size() == kMethodCount) {
        try {
            const RankTable table = rank_methods(report.summaries);
            const fs::path path = out_dir / "ranks.csv";
            auto out = open_out(path);
            out << "dataset";
            for (const Method method : kAllMethods) out << ',' << to_string(method);
            out << '\n';
            for (std::size_t d = 0; d < table.datasets.size(); ++d) {
                out << table.datasets[d];
                for (const int r : table.ranks[d]) out << ',' << r;
                out << '\n';
            }
            out << "avg";
            for (const double a : table.average) out << ',' << fmt(a);
            out << '\n';
            finish(out, path);
        } catch (const std::invalid_argument& e) {
            log << "warning: ranks.csv skipped: " << e.what() << '\n';
        }
    }
    if (!report.failures.empty()) {
        const fs::path path = out_dir / "failures.txt";
        auto out = open_out(path);
        for (const auto& f : report.failures) out << f << '\n';
        finish(out, path);
    }
    log << "wrote " << report.summaries.size() << " result rows and " << report.curve_files << " curve files to "
        << out_dir.string() << '\n';
    return report;
}

StatsGroup parse_group(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("group: expected name=dataset[,dataset...], got '" + spec + "'");
    }
    StatsGroup g;
    g.name = spec.substr(0, eq);
    std::stringstream rest(spec.substr(eq + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
        if (!item.empty()) g.datasets.push_back(item);
    }
    if (g.datasets.empty()) {
        throw std::invalid_argument("group '" + g.name + "': no datasets");
    }
    return g;
}

std::vector<StatsRow> compare_groups(const std::vector<ResultRow>& results, const std::vector<StatsGroup>& groups) {
    constexpr Method kStdSide[] = {Method::Std, Method::StdL2, Method::StdDropout};
    constexpr Method kDlSide[] = {Method::DlRandom, Method::DlNearest};

    std::vector<std::string> order;
    std::map<std::pair<std::string, Method>, const ResultRow*> index;
    for (const auto& row : results) {
        if (std::find(order.begin(), order.end(), row.dataset) == order.end()) {
            order.push_back(row.dataset);
        }
        index[{row.dataset, row.method}] = &row;
    }
    auto folds_of = [&](const std::string& dataset, Method method) -> const std::vector<double>& {
        const auto it = index.find({dataset, method});
        if (it == index.end()) {
            throw std::invalid_argument("stats: no results for " + dataset + " " + std::string(to_string(method)));
        }
        if (it->second->fold_mse_val.empty()) {
            throw std::invalid_argument("stats: missing folds for " + dataset + " " +
                                        std::string(to_string(method)));
        }
        return it->second->fold_mse_val;
    };

    std::vector<StatsRow> rows;
    for (const auto& group : groups) {
        const std::vector<std::string>& members = group.datasets.empty() ? order : group.datasets;
        for (const Method s : kStdSide) {
            for (const Method d : kDlSide) {
                StatsRow row;
                row.group = group.name;
                row.std_method = s;
                row.dl_method = d;
                for (const auto& ds : members) {
                    const auto& a = folds_of(ds, s);
                    const auto& b = folds_of(ds, d);
                    if (a.size() != b.size()) {
                        throw std::invalid_argument("stats: fold count mismatch for " + ds + " (" +
                                                    std::string(to_string(s)) + " has " + std::to_string(a.size()) +
                                                    ", " + std::string(to_string(d)) + " has " +
                                                    std::to_string(b.size()) + ")");
                    }
                    for (std::size_t f = 0; f < a.size(); ++f) {
                        row.differences.push_back(a[f] - b[f]);
                    }
                }
                const auto& diff = row.differences;
                row.median_delta = stats::median(diff);
                row.wilcoxon.kind = stats::TestKind::wilcoxon;
                row.wilcoxon.sidedness = stats::Sidedness::greater;
                row.shapiro.kind = stats::TestKind::shapiro_wilk;
                row.t_test.kind = stats::TestKind::t_paired;
                const bool all_zero = std::all_of(diff.begin(), diff.end(), [](double v) { return v == 0.0; });
                if (!all_zero) {
                    row.wilcoxon = stats::wilcoxon_signed_rank(diff, stats::Sidedness::greater);
                    const bool constant =
                        std::all_of(diff.begin(), diff.end(), [&](double v) { return v == diff.front(); });
                    if (constant) {
                        row.shapiro.p_value = std::numeric_limits<double>::quiet_NaN();
                        row.t_test.p_value = std::numeric_limits<double>::quiet_NaN();
                    } else {
                        if (diff.size() >= 3) row.shapiro = stats::shapiro_wilk(diff);
                        else row.shapiro.p_value = std::numeric_limits<double>::quiet_NaN();
                        row.t_test = stats::paired_t_test(diff, stats::Sidedness::two_sided);
                    }
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out) {
    out << "dataset_group,std_group,dl_group,median_delta,wilcoxon_p,shapiro_p,t_p,m,wilcoxon_alternative\n";
    for (const auto& r : rows) {
        out << r.group << ',' << to_string(r.std_method) << ',' << to_string(r.dl_method) << ','
            << fmt(r.median_delta) << ',' << fmt(r.wilcoxon.p_value) << ',' << fmt(r.shapiro.p_value) << ','
            << fmt(r.t_test.p_value) << ',' << r.differences.size() << ',' << to_string(r.wilcoxon.sidedness)
            << '\n';
    }
}

std::vector<StatsRow> cmd_stats(const fs::path& results_csv, const std::vector<StatsGroup>& groups,
                                const fs::path& out_dir, std::size_t bins, std::ostream& log) {
    std::ifstream in(results_csv);
    if (!in) {
        throw std::runtime_error("cannot open " + results_csv.string());
    }
    const auto results = read_results_csv(in);
    std::vector<StatsGroup> effective = groups;
    if (effective.empty()) {
        effective.push_back({"all", {}});
    }
    auto rows = compare_groups(results, effective);
    fs::create_directories(out_dir);
    {
        const fs::path path = out_dir / "stats.csv";
        auto out = open_out(path);
        write_stats_csv(rows, out);
        finish(out, path);
    }
    for (const auto& r : rows) {
        const fs::path path = out_dir / ("hist_" + r.group + "_" + std::string(to_string(r.std_method)) + "_vs_" +
                                         std::string(to_string(r.dl_method)) + ".csv");
        auto out = open_out(path);
        out << "bin_left,bin_right,count\n";
        for (const auto& bin : stats::histogram(r.differences, bins)) {
            out << fmt(bin.left) << ',' << fmt(bin.right) << ',' << bin.count << '\n';
        }
        finish(out, path);
    }
    log << "wrote " << rows.size() << " comparisons to " << (out_dir / "stats.csv").string() << '\n';
    return rows;
}

std::vector<Series> read_curves(const std::vector<fs::path>& curve_csvs, const PlotOptions& options,
                                std::ostream& log) {
    if (curve_csvs.empty()) {
        throw std::invalid_argument("plot: no curve files");
    }
    std::vector<Series> raw;
    for (const auto& path : curve_csvs) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error("plot: cannot open " + path.string());
        }
        std::string line;
        if (!std::getline(in, line)) {
            throw std::runtime_error("plot: empty file " + path.string());
        }
        std::vector<std::string> header;
        {
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) header.push_back(cell);
        }
        const auto xcol = std::find(header.begin(), header.end(), "epoch");
        const auto ycol = std::find(header.begin(), header.end(), options.metric);
        if (xcol == header.end() || ycol == header.end()) {
            throw std::runtime_error("plot: " + path.string() + " lacks 'epoch' or '" + options.metric + "'");
        }
        const auto xi = static_cast<std::size_t>(xcol - header.begin());
        const auto yi = static_cast<std::size_t>(ycol - header.begin());
        Series s;
        s.name = path.stem().string();
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            double x = std::numeric_limits<double>::quiet_NaN();
            double y = x;
            if (cells.size() > std::max(xi, yi)) {
                x = std::strtod(cells[xi].c_str(), nullptr);
                y = std::strtod(cells[yi].c_str(), nullptr);
            }
            if (!std::isfinite(x) || !std::isfinite(y)) {
                log << "warning: " << path.string() << " line " << line_no << ": non-finite value skipped\n";
                continue;
            }
            s.points.emplace_back(x, y);
        }
        raw.push_back(std::move(s));
    }
    if (!options.average_folds) {
        return raw;
    }
    std::vector<Series> merged;
    std::vector<std::map<double, std::pair<double, std::size_t>>> sums;
    for (const auto& s : raw) {
        std::string key = s.name;
        if (const auto pos = key.rfind("__f"); pos != std::string::npos) key.resize(pos);
        auto it = std::find_if(merged.begin(), merged.end(), [&](const Series& m) { return m.name == key; });
        std::size_t slot = static_cast<std::size_t>(it - merged.begin());
        if (it == merged.end()) {
            merged.push_back({key, {}});
            sums.emplace_back();
        }
        for (const auto& [x, y] : s.points) {
            auto& acc = sums[slot][x];
            acc.first += y;
            ++acc.second;
        }
    }
    for (std::size_t i = 0; i < merged.size(); ++i) {
        for (const auto& [x, acc] : sums[i]) {
            merged[i].points.emplace_back(x, acc.first / static_cast<double>(acc.second));
        }
    }
    return merged;
}

void cmd_plot(const std::vector<fs::path>& curve_csvs, const fs::path& out_svg, const PlotOptions& options,
              std::ostream& log) {
    const auto series = read_curves(curve_csvs, options, log);
    ChartOptions chart;
    chart.title = options.title;
    chart.y_label = options.metric;
    chart.log_y = options.log_y;
    auto out = open_out(out_svg);
    write_svg_chart(series, chart, out);
    finish(out, out_svg);
    log << "wrote " << out_svg.string() << " (" << series.size() << " series)\n";
}

}  // namespace dloss::cli
