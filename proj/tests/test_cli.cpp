#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dloss/cli.hpp"
#include "published_results.hpp"

using namespace dloss;
using namespace dloss::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dloss_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string manifest_error(const json& doc) {
    try {
        parse_manifest(doc);
    } catch (const ManifestError& e) {
        return e.what();
    }
    return {};
}

// One fold value per dataset, taken from a table of means.
std::vector<ResultRow> rows_from_means(const std::vector<published::Row>& table) {
    std::vector<ResultRow> rows;
    for (const auto& [name, values] : table) {
        for (std::size_t m = 0; m < kMethodCount; ++m) {
            ResultRow r;
            r.dataset = name;
            r.method = kAllMethods[m];
            r.mse_val = values[m];
            r.fold_mse_val = {values[m]};
            rows.push_back(r);
        }
    }
    return rows;
}

const StatsRow& find_row(const std::vector<StatsRow>& rows, const std::string& group, Method s, Method d) {
    for (const auto& r : rows) {
        if (r.group == group && r.std_method == s && r.dl_method == d) return r;
    }
    throw std::logic_error("row not found");
}

}  // namespace

TEST_CASE("manifest: defaults and generator shorthand") {
    const ExperimentManifest m = parse_manifest(json::parse(R"({"datasets": ["friedman1", "swiss_roll"]})"));
    REQUIRE(m.datasets.size() == 2);
    CHECK(m.datasets[0].name == "friedman1");
    CHECK(m.datasets[0].n == kDefaultSyntheticRows);
    CHECK(m.datasets[0].seed != m.datasets[1].seed);
    CHECK(m.methods.size() == kMethodCount);
    CHECK(m.epochs == 250);
    CHECK(m.fold_count == 5);
    CHECK(m.hidden == 64);
    CHECK(m.epsilon == 1e-3);
    CHECK(m.grid.size(Method::DlNearest) == GridSpec::full().size(Method::DlNearest));
}

TEST_CASE("manifest: quick preset and explicit keys") {
    const json doc = json::parse(R"({"datasets": ["regression1"], "quick": true})");
    const ExperimentManifest q = parse_manifest(doc);
    CHECK(q.epochs == kQuickEpochs);
    CHECK(q.datasets[0].n == kQuickSyntheticRows);
    CHECK(q.grid.size(Method::Std) == 4);
    CHECK(q.grid.size(Method::DlRandom) == 12);

    json explicit_epochs = doc;
    explicit_epochs["epochs"] = 7;
    CHECK(parse_manifest(explicit_epochs).epochs == 7);

    ManifestOverrides o;
    o.quick = true;
    o.seed = 99;
    o.jobs = 3;
    o.no_timing = true;
    const ExperimentManifest ov = parse_manifest(json::parse(R"({"datasets": ["regression1"], "seed": 1})"), o);
    CHECK(ov.quick);
    CHECK(ov.seed == 99);
    CHECK(ov.jobs == 3);
    CHECK_FALSE(ov.timing);
}

TEST_CASE("manifest: round trip through to_json") {
    const json doc = json::parse(R"({
        "datasets": [{"name": "r1", "generator": "regression1", "n": 40, "seed": 5}, "friedman1"],
        "methods": ["STD", "DL_NN"],
        "grid": {"learning_rates": [0.01], "theta_ds": [0.5, 1.0], "tuple_counts": [2]},
        "epochs": 3, "l2_form": "squared", "seed": 11
    })");
    const ExperimentManifest a = parse_manifest(doc);
    const ExperimentManifest b = parse_manifest(to_json(a));
    CHECK(to_json(a) == to_json(b));
    CHECK(b.l2_form == L2Form::squared);
    CHECK(b.datasets[0].n == 40);
    CHECK(b.datasets[0].seed == 5);
    CHECK(b.grid.size(Method::DlNearest) == 2);
}

TEST_CASE("manifest: schema errors name the field") {
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "epoch": 3})")).find("epoch") !=
          std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "methods": ["STD", "X"]})"))
              .find("methods[1]") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["nope"]})")).find("datasets[0]") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": []})")).find("datasets") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "grid": {"thetas": [-1]}})"))
              .find("grid.thetas[0]") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "grid": {"dropout_ps": [1.0]}})"))
              .find("grid.dropout_ps[0]") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": [{"generator": "regression1", "target": "y"}]})"))
              .find("datasets[0].target") != std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1", "regression1"]})")).find("duplicate") !=
          std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "epochs": 0})")).find("epochs") !=
          std::string::npos);
    CHECK(manifest_error(json::parse(R"({"datasets": ["regression1"], "l2_form": "cubic"})")).find("l2_form") !=
          std::string::npos);
}

TEST_CASE("manifest: csv datasets resolve relative to the manifest") {
    const fs::path dir = fresh_dir("csv_manifest");
    {
        std::ofstream out(dir / "tiny.csv");
        out << "a,b,y\n1,2,3\n2,3,4\n3,5,1\n4,4,2\n5,1,0\n6,0,1\n7,2,2\n8,9,3\n9,1,1\n10,3,4\n";
    }
    {
        std::ofstream out(dir / "m.json");
        out << R"({"datasets": [{"csv": "tiny.csv", "target": "y", "on_bad_row": "skip"}]})";
    }
    const ExperimentManifest m = load_manifest(dir / "m.json");
    REQUIRE(m.datasets.size() == 1);
    CHECK(m.datasets[0].name == "tiny");
    CHECK(m.datasets[0].csv == dir / "tiny.csv");
    const Dataset d = load_dataset(m.datasets[0]);
    CHECK(d.size() == 10);
    CHECK(d.features() == 2);

    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_manifest(dir / "bad.json"), ManifestError);
    CHECK_THROWS_AS(load_manifest(dir / "missing.json"), ManifestError);
}

TEST_CASE("output directory precedence") {
    ExperimentManifest m;
    m.output_dir = "from_manifest";
    ::unsetenv("DLOSS_OUTPUT_DIR");
    CHECK(resolve_output_dir(std::nullopt, m) == fs::path("from_manifest"));
    ::setenv("DLOSS_OUTPUT_DIR", "from_env", 1);
    CHECK(resolve_output_dir(std::nullopt, m) == fs::path("from_env"));
    CHECK(resolve_output_dir(std::string("from_flag"), m) == fs::path("from_flag"));
    ::unsetenv("DLOSS_OUTPUT_DIR");
}

TEST_CASE("gen-data writes a deterministic csv") {
    const fs::path dir = fresh_dir("gen");
    std::ostringstream log;
    cmd_gen_data(Generator::friedman1, 50, 3, dir / "a.csv", log, TupleDump{dir / "t.csv", Selection::nearest_neighbour, 2});
    cmd_gen_data(Generator::friedman1, 50, 3, dir / "b.csv", log);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(log.str().find("50 rows, 11 columns") != std::string::npos);
    CHECK(log.str().find("100 tuples") != std::string::npos);

    const Dataset d = load_csv(dir / "a.csv", CsvSchema{"y", {}, RowPolicy::reject_file});
    CHECK(d.size() == 50);
    CHECK(d.features() == generator_features(Generator::friedman1));

    cmd_gen_data(Generator::friedman1, 50, 4, dir / "c.csv", log);
    CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
    CHECK_THROWS(cmd_gen_data(Generator::friedman1, 1, 3, dir / "d.csv", log));
}

TEST_CASE("run: quick STD on regression1 writes every artifact and reruns identically") {
    const json doc = json::parse(R"({"datasets": ["regression1"], "methods": ["STD"], "quick": true, "timing": false})");
    const ExperimentManifest m = parse_manifest(doc);
    const fs::path a = fresh_dir("run_a");
    const fs::path b = fresh_dir("run_b");
    std::ostringstream log;
    const RunReport ra = cmd_run(m, a, log);
    CHECK(ra.failures.empty());
    CHECK(ra.curve_files == 20);
    std::size_t curves = 0;
    for (const auto& e : fs::directory_iterator(a / "curves")) curves += e.path().extension() == ".csv";
    CHECK(curves == 20);
    for (const char* f : {"manifest.json", "results.csv", "best_params.csv"}) CHECK(fs::exists(a / f));
    CHECK_FALSE(fs::exists(a / "ranks.csv"));

    std::ifstream rin(a / "results.csv");
    const auto results = read_results_csv(rin);
    REQUIRE(results.size() == 1);
    CHECK(results[0].method == Method::Std);
    CHECK(results[0].fold_mse_val.size() == 5);
    CHECK(results[0].mse_val < 1e-2);

    cmd_run(parse_manifest(json::parse(slurp(a / "manifest.json"))), b, log);
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), a);
        CAPTURE(rel.string());
        CHECK(slurp(e.path()) == slurp(b / rel));
    }
}

TEST_CASE("stats: replay of published means") {
    std::vector<ResultRow> rows = rows_from_means(published::real_mse_val());
    const auto synth = rows_from_means(published::synthetic_mse_val());
    rows.insert(rows.end(), synth.begin(), synth.end());

    std::vector<StatsGroup> groups;
    for (const auto* table : {&published::real_mse_val(), &published::synthetic_mse_val()}) {
        StatsGroup g;
        g.name = table == &published::real_mse_val() ? "real" : "synthetic";
        for (const auto& r : *table) g.datasets.push_back(r.first);
        groups.push_back(g);
    }
    const auto out = compare_groups(rows, groups);
    REQUIRE(out.size() == 12);
    for (const char* g : {"real", "synthetic"}) {
        for (const Method d : {Method::DlRandom, Method::DlNearest}) {
            const StatsRow& r = find_row(out, g, Method::Std, d);
            CHECK(r.differences.size() == 5);
            CHECK(r.median_delta > 0.0);
            CHECK(r.wilcoxon.sidedness == stats::Sidedness::greater);
        }
    }
    CHECK(find_row(out, "real", Method::StdDropout, Method::DlRandom).median_delta > 0.0);
    CHECK(find_row(out, "real", Method::StdDropout, Method::DlNearest).median_delta > 0.0);
    CHECK(find_row(out, "synthetic", Method::StdL2, Method::DlRandom).median_delta < 0.0);
    // All five real differences for STD vs DL_NN are positive.
    CHECK(find_row(out, "real", Method::Std, Method::DlNearest).wilcoxon.p_value == 0.03125);

    std::ostringstream csv;
    write_stats_csv(out, csv);
    CHECK(csv.str().rfind("dataset_group,std_group,dl_group,median_delta,wilcoxon_p,shapiro_p,t_p,m,", 0) == 0);
}

TEST_CASE("stats: identical methods give p = 1 and zero median") {
    std::vector<ResultRow> rows;
    for (const Method m : kAllMethods) {
        ResultRow r;
        r.dataset = "d";
        r.method = m;
        r.fold_mse_val = {0.1, 0.2, 0.3, 0.4, 0.5};
        rows.push_back(r);
    }
    const auto out = compare_groups(rows, {StatsGroup{"all", {}}});
    REQUIRE(out.size() == 6);
    for (const auto& r : out) {
        CHECK(r.median_delta == 0.0);
        CHECK(r.wilcoxon.p_value == 1.0);
    }

    rows.back().fold_mse_val.pop_back();
    CHECK_THROWS_AS(compare_groups(rows, {StatsGroup{"all", {}}}), std::invalid_argument);
    rows.pop_back();
    CHECK_THROWS_AS(compare_groups(rows, {StatsGroup{"all", {}}}), std::invalid_argument);
}

TEST_CASE("stats: command writes csv and histograms") {
    const fs::path dir = fresh_dir("stats_cmd");
    std::vector<ResultRow> rows = rows_from_means(published::synthetic_mse_val());
    {
        std::ofstream out(dir / "results.csv");
        out << "dataset,method,mse_train,sigma_train,mse_val,sigma_val,ep,t,mse_val_raw,fold_mse_val\n";
        for (const auto& r : rows) {
            out << r.dataset << ',' << to_string(r.method) << ",0,0," << r.mse_val << ",0,1,0," << r.mse_val << ','
                << r.mse_val << '\n';
        }
    }
    std::ostringstream log;
    const auto out = cmd_stats(dir / "results.csv", {}, dir / "out", 4, log);
    CHECK(out.size() == 6);
    CHECK(fs::exists(dir / "out" / "stats.csv"));
    const std::string hist = slurp(dir / "out" / "hist_all_STD_vs_DL_NN.csv");
    CHECK(hist.rfind("bin_left,bin_right,count\n", 0) == 0);
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 5);

    CHECK(parse_group("real=a,b").datasets == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(parse_group("noequals"), std::invalid_argument);
}

TEST_CASE("plot: one polyline per curve, non-finite rows skipped") {
    const fs::path dir = fresh_dir("plot");
    std::ofstream(dir / "x__STD__g0__f0.csv") << "epoch,mse_train,mse_val,seconds\n1,0.5,0.6,0\n2,0.4,0.5,0\n3,0.3,nan,0\n";
    std::ofstream(dir / "x__DL_NN__g0__f0.csv") << "epoch,mse_train,mse_val,seconds\n1,0.5,0.55,0\n2,0.3,0.35,0\n";
    const std::vector<fs::path> files{dir / "x__STD__g0__f0.csv", dir / "x__DL_NN__g0__f0.csv"};

    std::ostringstream log;
    const auto series = read_curves(files, PlotOptions{}, log);
    REQUIRE(series.size() == 2);
    CHECK(series[0].points.size() == 2);
    CHECK(log.str().find("non-finite") != std::string::npos);

    PlotOptions opts;
    opts.log_y = true;
    cmd_plot(files, dir / "a.svg", opts, log);
    cmd_plot(files, dir / "b.svg", opts, log);
    const std::string svg = slurp(dir / "a.svg");
    CHECK(svg == slurp(dir / "b.svg"));
    std::size_t polylines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++polylines;
    CHECK(polylines == 2);

    PlotOptions bad;
    bad.metric = "nope";
    CHECK_THROWS(read_curves(files, bad, log));
    CHECK_THROWS_AS(read_curves({}, PlotOptions{}, log), std::invalid_argument);
}

TEST_CASE("plot: fold averaging") {
    const fs::path dir = fresh_dir("plot_avg");
    std::ofstream(dir / "x__STD__g0__f0.csv") << "epoch,mse_train,mse_val,seconds\n1,1,0.2,0\n2,1,0.4,0\n";
    std::ofstream(dir / "x__STD__g0__f1.csv") << "epoch,mse_train,mse_val,seconds\n1,1,0.4,0\n2,1,0.6,0\n";
    PlotOptions opts;
    opts.average_folds = true;
    std::ostringstream log;
    const auto series = read_curves({dir / "x__STD__g0__f0.csv", dir / "x__STD__g0__f1.csv"}, opts, log);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].points.size() == 2);
    CHECK(series[0].points[0].second == doctest::Approx(0.3));
    CHECK(series[0].points[1].second == doctest::Approx(0.5));
}
