#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace lbg {

// Dense row-major matrix of doubles. Small enough on purpose: the toolkit
// works at document-term scale where a flat vector is the right storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// m x n binary keyword indicators, one row per document.
class IndicatorMatrix {
public:
    IndicatorMatrix() = default;
    IndicatorMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), x_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool at(std::size_t r, std::size_t c) const { return x_[r * cols_ + c] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { x_[r * cols_ + c] = v ? 1 : 0; }

    std::span<const std::uint8_t> row(std::size_t r) const { return {x_.data() + r * cols_, cols_}; }

    std::size_t row_count(std::size_t r) const {
        std::size_t g = 0;
        for (std::size_t c = 0; c < cols_; ++c) g += x_[r * cols_ + c];
        return g;
    }

    bool operator==(const IndicatorMatrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> x_;
};

// Documents as rows of non-negative weights (tf-idf or raw counts).
using DocumentMatrix = Matrix;

// k x m topic responsibilities; every column sums to 1.
using PosteriorMatrix = Matrix;

inline void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace lbg
