#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dloss/cli.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRunFailures = 1;
constexpr int kUsage = 2;

}  // namespace

int main(int argc, char** argv) {
    namespace cli = dloss::cli;
    CLI::App app{"dloss: derivative-alignment regularized regression experiments"};
    app.require_subcommand(1);

    std::string generator;
    std::size_t rows = cli::kDefaultSyntheticRows;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::string dump_path;
    std::size_t dump_l = 1;
    std::string dump_selection = "nn";
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV (x1..xk,y)");
    gen->add_option("generator", generator, "friedman1|regression1|regression10|sparse_uncorrelated|swiss_roll")
        ->required();
    gen->add_option("-n,--rows", rows, "Number of rows");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("-o,--out", gen_out, "Output CSV path")->required();
    gen->add_option("--dump-tuples", dump_path, "Also write the tuple set (i,j,norm,data_derivative)");
    gen->add_option("--tuples-l", dump_l, "Partners per point for --dump-tuples")->check(CLI::PositiveNumber);
    gen->add_option("--selection", dump_selection, "Tuple selection for --dump-tuples")
        ->check(CLI::IsMember({"nn", "random"}));

    std::string manifest_path;
    bool quick = false;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool no_timing = false;
    auto* run = app.add_subcommand("run", "Run the cross-validated grid search from a JSON manifest");
    run->add_option("manifest", manifest_path, "Experiment manifest (JSON)")->required();
    run->add_flag("--quick", quick, "Desk-scale preset: n=500, 100 epochs, reduced grid");
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Master seed (overrides the manifest)");
    run->add_option("--out", out_dir, "Output directory (overrides DLOSS_OUTPUT_DIR and the manifest)");
    run->add_flag("--no-timing", no_timing, "Write wall-time columns as 0 for byte-identical reruns");

    std::string results_path;
    std::vector<std::string> group_specs;
    std::string stats_out;
    std::size_t bins = 10;
    auto* st = app.add_subcommand("stats", "Paired significance tests STD-side vs DL-side");
    st->add_option("results", results_path, "results.csv written by run")->required();
    st->add_option("--group", group_specs, "Dataset group name=ds1,ds2 (repeatable; default: all)");
    st->add_option("--out", stats_out, "Output directory (default: next to results.csv)");
    st->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);

    std::vector<std::string> curves;
    std::string svg_out;
    cli::PlotOptions plot_options;
    auto* plot = app.add_subcommand("plot", "SVG learning curves from curve CSV files");
    plot->add_option("curves", curves, "Curve CSV files")->required();
    plot->add_option("-o,--out", svg_out, "Output SVG path")->required();
    plot->add_option("--metric", plot_options.metric, "Column to plot")
        ->check(CLI::IsMember({"mse_train", "mse_val"}));
    plot->add_flag("--log", plot_options.log_y, "Logarithmic y axis");
    plot->add_flag("--average-folds", plot_options.average_folds, "Average curves across folds");
    plot->add_option("--title", plot_options.title, "Chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) {
            std::optional<cli::TupleDump> dump;
            if (!dump_path.empty()) {
                dump = cli::TupleDump{dump_path,
                                      dump_selection == "random" ? dloss::Selection::random
                                                                 : dloss::Selection::nearest_neighbour,
                                      dump_l};
            }
            cli::cmd_gen_data(dloss::parse_generator(generator), rows, gen_seed, gen_out, std::cout, dump);
            return kOk;
        }
        if (*run) {
            cli::ManifestOverrides overrides;
            overrides.quick = quick;
            overrides.seed = seed;
            overrides.jobs = jobs;
            overrides.no_timing = no_timing;
            const auto manifest = cli::load_manifest(manifest_path, overrides);
            const auto report = cli::cmd_run(manifest, cli::resolve_output_dir(out_dir, manifest), std::cout);
            if (!report.failures.empty()) {
                std::cerr << report.failures.size() << " failed run(s):\n";
                for (const auto& f : report.failures) std::cerr << "  " << f << '\n';
                return kRunFailures;
            }
            return kOk;
        }
        if (*st) {
            std::vector<cli::StatsGroup> groups;
            for (const auto& spec : group_specs) groups.push_back(cli::parse_group(spec));
            const std::filesystem::path out =
                stats_out.empty() ? std::filesystem::path(results_path).parent_path() : std::filesystem::path(stats_out);
            cli::cmd_stats(results_path, groups, out.empty() ? "." : out, bins, std::cout);
            return kOk;
        }
        if (*plot) {
            std::vector<std::filesystem::path> paths(curves.begin(), curves.end());
            cli::cmd_plot(paths, svg_out, plot_options, std::cerr);
            return kOk;
        }
    } catch (const cli::ManifestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunFailures;
    }
    return kUsage;
}
