#include "dloss/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dloss/random.hpp"

namespace dloss {

void Dataset::validate() const {
    if (inputs.rows() != targets.size()) {
        throw std::invalid_argument("dataset '" + name + "': " + std::to_string(inputs.rows()) +
                                    " input rows but " + std::to_string(targets.size()) + " targets");
    }
    if (size() < 2) {
        throw std::invalid_argument("dataset '" + name + "': fewer than 2 rows");
    }
    if (features() < 1) {
        throw std::invalid_argument("dataset '" + name + "': no feature columns");
    }
    for (std::size_t r = 0; r < size(); ++r) {
        for (std::size_t c = 0; c < features(); ++c) {
            if (!std::isfinite(inputs(r, c))) {
                throw std::invalid_argument("dataset '" + name + "': non-finite input at row " +
                                            std::to_string(r) + ", column " + std::to_string(c));
            }
        }
        if (!std::isfinite(targets[r])) {
            throw std::invalid_argument("dataset '" + name + "': non-finite target at row " + std::to_string(r));
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name = name;
    out.kind = kind;
    out.inputs = inputs.select_rows(rows);
    out.targets.reserve(rows.size());
    for (const auto r : rows) {
        out.targets.push_back(targets[r]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Generator parse_generator(std::string_view name) {
    for (const auto g : kAllGenerators) {
        if (to_string(g) == name) {
            return g;
        }
    }
    if (name == "f1") {
        return Generator::friedman1;
    }
    throw std::invalid_argument("unknown generator '" + std::string(name) + "'");
}

std::string_view to_string(Generator g) noexcept {
    switch (g) {
        case Generator::friedman1: return "friedman1";
        case Generator::regression1: return "regression1";
        case Generator::regression10: return "regression10";
        case Generator::sparse_uncorrelated: return "sparse_uncorrelated";
        case Generator::swiss_roll: return "swiss_roll";
    }
    return "unknown";
}

std::size_t generator_features(Generator g) noexcept {
    switch (g) {
        case Generator::regression1: return 1;
        case Generator::swiss_roll: return 3;
        default: return 10;
    }
}

double friedman1(std::span<const double> x) {
    return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
           5.0 * x[4];
}

double sparse_uncorrelated(std::span<const double> x) {
    return x[0] + 2.0 * x[1] - 2.0 * x[2] - 1.5 * x[3];
}

std::vector<double> regression_coefficients(std::size_t k, std::uint64_t seed) {
    auto rng = make_rng(seed, Stream::coefficients);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> c(k);
    for (auto& v : c) {
        v = 100.0 * normal(rng);
    }
    return c;
}

Dataset generate_synthetic(Generator generator, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("generate_synthetic: n must be at least 2, got " + std::to_string(n));
    }
    const std::size_t k = generator_features(generator);
    Dataset data;
    data.name = std::string(to_string(generator));
    data.kind = DatasetKind::synthetic;
    data.inputs = Matrix(n, k);
    data.targets.resize(n);

    auto rng = make_rng(seed, Stream::data);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    if (generator == Generator::swiss_roll) {
        // t in [1.5 pi, 4.5 pi], so both t cos t and t sin t lie in [-4.5 pi, 4.5 pi].
        constexpr double bound = 4.5 * std::numbers::pi;
        for (std::size_t r = 0; r < n; ++r) {
            const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * unit(rng));
            const double u = unit(rng);
            data.inputs(r, 0) = (t * std::cos(t) + bound) / (2.0 * bound);
            data.inputs(r, 1) = u;
            data.inputs(r, 2) = (t * std::sin(t) + bound) / (2.0 * bound);
            data.targets[r] = t;
        }
        return data;
    }

    for (auto& v : data.inputs.values()) {
        v = unit(rng);
    }
    std::vector<double> coefficients;
    if (generator == Generator::regression1 || generator == Generator::regression10) {
        coefficients = regression_coefficients(k, seed);
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = data.inputs.row(r);
        switch (generator) {
            case Generator::friedman1: data.targets[r] = friedman1(x); break;
            case Generator::sparse_uncorrelated: data.targets[r] = sparse_uncorrelated(x); break;
            default:
                data.targets[r] = std::inner_product(x.begin(), x.end(), coefficients.begin(), 0.0);
                break;
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out) {
    if (cell.empty()) {
        return false;
    }
    if (cell.front() == '+') {
        cell.remove_prefix(1);
    }
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema, std::string name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CsvError("csv: missing header");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header_cells = split_line(line);
    std::vector<std::string> header(header_cells.begin(), header_cells.end());
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) {
            throw CsvError("csv: malformed header, empty column name at position " + std::to_string(c + 1));
        }
        if (std::find(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(c), header[c]) !=
            header.begin() + static_cast<std::ptrdiff_t>(c)) {
            throw CsvError("csv: malformed header, duplicate column '" + header[c] + "'");
        }
    }
    auto column_of = [&](const std::string& col) {
        const auto it = std::find(header.begin(), header.end(), col);
        if (it == header.end()) {
            throw CsvError("csv: column '" + col + "' not found in header");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    if (schema.target.empty()) {
        throw CsvError("csv: schema names no target column");
    }
    const std::size_t target_col = column_of(schema.target);
    std::vector<std::size_t> feature_cols;
    if (schema.features.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != target_col) {
                feature_cols.push_back(c);
            }
        }
    } else {
        for (const auto& f : schema.features) {
            const auto c = column_of(f);
            if (c == target_col) {
                throw CsvError("csv: column '" + f + "' is both target and feature");
            }
            feature_cols.push_back(c);
        }
    }
    if (feature_cols.empty()) {
        throw CsvError("csv: schema selects no feature columns");
    }

    Dataset data;
    data.name = std::move(name);
    data.kind = DatasetKind::real;
    data.inputs = Matrix(0, feature_cols.size());
    std::vector<double> row(feature_cols.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            if (schema.policy == RowPolicy::skip_row) {
                continue;
            }
            throw CsvError("csv: row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header.size()));
        }
        bool ok = true;
        auto read = [&](std::size_t col, double& value) {
            if (!parse_number(cells[col], value)) {
                if (schema.policy == RowPolicy::reject_file) {
                    throw CsvError("csv: row " + std::to_string(line_no) + ", column '" + header[col] +
                                   "': non-numeric or non-finite value '" + std::string(cells[col]) + "'");
                }
                ok = false;
            }
        };
        for (std::size_t f = 0; f < feature_cols.size() && ok; ++f) {
            read(feature_cols[f], row[f]);
        }
        double y = 0.0;
        if (ok) {
            read(target_col, y);
        }
        if (!ok) {
            continue;
        }
        data.inputs.append_row(row);
        data.targets.push_back(y);
    }
    if (data.size() < 2) {
        throw CsvError("csv: fewer than 2 rows");
    }
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::string name) {
    std::ifstream in(path);
    if (!in) {
        throw CsvError("csv: cannot open '" + path.string() + "'");
    }
    if (name.empty()) {
        name = path.stem().string();
    }
    return parse_csv(in, schema, std::move(name));
}

void write_csv(const Dataset& data, std::ostream& out) {
    for (std::size_t c = 0; c < data.features(); ++c) {
        out << 'x' << (c + 1) << ',';
    }
    out << "y\n";
    char buf[32];
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.features(); ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, data.inputs(r, c));
            out.write(buf, res.ptr - buf);
            out << ',';
        }
        const auto res = std::to_chars(buf, buf + sizeof buf, data.targets[r]);
        out.write(buf, res.ptr - buf);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldSplit::train_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) {
            rows.push_back(i);
        }
    }
    return rows;
}

std::vector<std::size_t> FoldSplit::validation_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) {
            rows.push_back(i);
        }
    }
    return rows;
}

std::size_t FoldSplit::fold_size(std::size_t fold) const {
    return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), fold));
}

FoldSplit make_folds(std::size_t n, std::size_t fold_count, std::uint64_t seed) {
    if (fold_count < 2) {
        throw std::invalid_argument("make_folds: fold_count must be at least 2");
    }
    if (n < fold_count) {
        throw std::invalid_argument("make_folds: n (" + std::to_string(n) + ") < fold_count (" +
                                    std::to_string(fold_count) + ")");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = make_rng(seed, Stream::folds);
    // Fisher-Yates with an explicit draw so the permutation does not depend on
    // the standard library's shuffle implementation.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    FoldSplit split;
    split.fold_count = fold_count;
    split.assignments.resize(n);
    // Position p of the permutation goes to fold p mod fold_count: sizes
    // differ by at most one.
    for (std::size_t p = 0; p < n; ++p) {
        split.assignments[perm[p]] = p % fold_count;
    }
    return split;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

namespace {

std::pair<double, double> mean_and_population_std(std::span<const double> values) {
    double mean = 0.0;
    for (const auto v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (const auto v : values) {
        ss += (v - mean) * (v - mean);
    }
    double sd = std::sqrt(ss / static_cast<double>(values.size()));
    // Constant column: keep it, mapped to zero.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
        sd = 1.0;
    }
    return {mean, sd};
}

}  // namespace

Standardizer Standardizer::fit(const Dataset& data, std::span<const std::size_t> train_rows) {
    if (train_rows.empty()) {
        throw std::invalid_argument("Standardizer::fit: no training rows");
    }
    Standardizer s;
    const std::size_t k = data.features();
    s.input_means_.resize(k);
    s.input_stds_.resize(k);
    std::vector<double> column(train_rows.size());
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            column[r] = data.inputs(train_rows[r], c);
        }
        std::tie(s.input_means_[c], s.input_stds_[c]) = mean_and_population_std(column);
    }
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
        column[r] = data.targets[train_rows[r]];
    }
    std::tie(s.target_mean_, s.target_std_) = mean_and_population_std(column);
    return s;
}

void Standardizer::apply_row(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = (row[c] - input_means_[c]) / input_stds_[c];
    }
}

void Standardizer::invert_row(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = row[c] * input_stds_[c] + input_means_[c];
    }
}

Dataset Standardizer::apply(const Dataset& data) const {
    if (data.features() != input_means_.size()) {
        throw std::invalid_argument("Standardizer::apply: feature count mismatch");
    }
    Dataset out = data;
    for (std::size_t r = 0; r < out.size(); ++r) {
        apply_row(out.inputs.row(r));
        out.targets[r] = apply_target(out.targets[r]);
    }
    return out;
}

}  // namespace dloss
