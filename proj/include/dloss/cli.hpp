#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dloss/dataset.hpp"
#include "dloss/experiment.hpp"
#include "dloss/stats.hpp"
#include "dloss/svg.hpp"
#include "dloss/tuples.hpp"

namespace dloss::cli {

/// Manifest content that does not match the schema; the message names the
/// offending field.
class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSource {
    std::string name;
    std::optional<Generator> generator;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::filesystem::path csv;  // resolved path when generator is empty
    CsvSchema schema;
};

struct ExperimentManifest {
    std::vector<DatasetSource> datasets;
    std::vector<Method> methods;
    GridSpec grid;
    std::size_t fold_count = 5;
    std::size_t epochs = 250;
    std::size_t hidden = 64;
    double epsilon = 1e-3;
    L2Form l2_form = L2Form::norm;
    std::uint64_t seed = 0;
    std::string output_dir = "results";
    bool quick = false;
    bool timing = true;
    std::size_t jobs = 1;
};

/// Command-line values that take precedence over the manifest file.
struct ManifestOverrides {
    bool quick = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    bool no_timing = false;
};

inline constexpr std::size_t kDefaultSyntheticRows = 2500;
inline constexpr std::size_t kQuickSyntheticRows = 500;
inline constexpr std::size_t kQuickEpochs = 100;

/// Resolves presets and defaults. Relative csv paths are taken relative to
/// base_dir. Unknown keys are rejected.
ExperimentManifest parse_manifest(const nlohmann::json& doc, const ManifestOverrides& overrides = {},
                                  const std::filesystem::path& base_dir = {});
ExperimentManifest load_manifest(const std::filesystem::path& path, const ManifestOverrides& overrides = {});

/// Fully resolved manifest; parsing it again yields the same experiment.
nlohmann::json to_json(const ExperimentManifest& manifest);

/// --out, then $DLOSS_OUTPUT_DIR, then the manifest's output_dir.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag, const ExperimentManifest& manifest);

Dataset load_dataset(const DatasetSource& source);

struct TupleDump {
    std::filesystem::path path;
    Selection selection = Selection::nearest_neighbour;
    std::size_t l = 1;
};

/// Writes a generated dataset as CSV and prints its shape to log.
void cmd_gen_data(Generator generator, std::size_t n, std::uint64_t seed, const std::filesystem::path& out_path,
                  std::ostream& log, const std::optional<TupleDump>& dump = std::nullopt);

struct RunReport {
    std::filesystem::path out_dir;
    std::vector<MethodSummary> summaries;
    std::vector<std::string> failures;
    std::size_t curve_files = 0;
};

/// Runs every (dataset, method) grid and writes results.csv, best_params.csv,
/// ranks.csv (when all methods ran), manifest.json and curves/*.csv.
RunReport cmd_run(const ExperimentManifest& manifest, const std::filesystem::path& out_dir, std::ostream& log);

struct StatsGroup {
    std::string name;
    std::vector<std::string> datasets;  // empty = every dataset in the results
};

struct StatsRow {
    std::string group;
    Method std_method = Method::Std;
    Method dl_method = Method::DlNearest;
    std::vector<double> differences;  // STD-side minus DL-side, per fold
    double median_delta = 0.0;
    stats::TestResult wilcoxon;
    stats::TestResult shapiro;
    stats::TestResult t_test;
};

/// The six comparisons {STD, STD_L2, STD_DO} x {DL_RND, DL_NN} per group.
std::vector<StatsRow> compare_groups(const std::vector<ResultRow>& results, const std::vector<StatsGroup>& groups);

/// dataset_group,std_group,dl_group,median_delta,wilcoxon_p,shapiro_p,t_p,m,wilcoxon_alternative
void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out);

/// Writes stats.csv and one histogram CSV per comparison into out_dir.
std::vector<StatsRow> cmd_stats(const std::filesystem::path& results_csv, const std::vector<StatsGroup>& groups,
                                const std::filesystem::path& out_dir, std::size_t bins, std::ostream& log);

/// Parses "name=ds1,ds2".
StatsGroup parse_group(const std::string& spec);

struct PlotOptions {
    std::string metric = "mse_val";
    bool log_y = false;
    /// Average curves that differ only in their fold suffix ("__f<k>").
    bool average_folds = false;
    std::string title;
};

std::vector<Series> read_curves(const std::vector<std::filesystem::path>& curve_csvs, const PlotOptions& options,
                                std::ostream& log);
void cmd_plot(const std::vector<std::filesystem::path>& curve_csvs, const std::filesystem::path& out_svg,
              const PlotOptions& options, std::ostream& log);

}  // namespace dloss::cli
