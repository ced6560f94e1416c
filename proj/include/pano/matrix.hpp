#pragma once

// Small row-major dense matrix. Every reduction runs in a fixed index order
// so results are reproducible bit for bit on a given platform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pano/errors.hpp"

namespace pano {

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension");
        data_.assign(static_cast<std::size_t>(rows) * cols, fill);
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }

    double& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const noexcept {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    std::span<double> row(int r) noexcept {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
    }
    std::span<const double> row(int r) const noexcept {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_transposed: " + dims(a) + " * " + dims(b) + "^T");
    Matrix out(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.rows(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
            out(i, j) = acc;
        }
    }
    return out;
}

/// Columns [first, first + count) of `m`.
inline Matrix column_block(const Matrix& m, int first, int count) {
    if (first < 0 || count < 0 || first + count > m.cols()) throw ShapeError("column_block out of range");
    Matrix out(m.rows(), count);
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < count; ++c) out(r, c) = m(r, first + c);
    return out;
}

/// Numerically stable softmax of each row, in place.
inline void softmax_rows(Matrix& m) {
    for (int r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        if (row.empty()) continue;
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& x : row) {
            x = std::exp(x - peak);
            total += x;
        }
        for (double& x : row) x /= total;
    }
}

}  // namespace pano
