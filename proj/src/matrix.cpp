#include "dloss/matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dloss {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw std::invalid_argument("matrix: expected " + std::to_string(rows * cols) + " values, got " +
                                    std::to_string(values_.size()));
    }
}

void Matrix::append_row(std::span<const double> row) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = row.size();
    }
    if (row.size() != cols_) {
        throw std::invalid_argument("matrix: row width " + std::to_string(row.size()) + " != " +
                                    std::to_string(cols_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = row(indices[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace dloss
