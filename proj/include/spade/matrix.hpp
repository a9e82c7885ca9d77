#pragma once

#include <cstddef>
#include <vector>

#include "spade/common.hpp"

namespace spade {

// Dense row-major matrix. Count covariances here are small (a few dozen
// modes), so a flat vector is all the linear algebra this library needs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Matrix operator*(const Matrix& rhs) const {
        detail::require_param(cols_ == rhs.rows_, "Matrix multiply: shape mismatch");
        Matrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
            }
        }
        return out;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }

    // max |A - B| entrywise
    double max_abs_diff(const Matrix& other) const {
        detail::require_param(rows_ == other.rows_ && cols_ == other.cols_,
                              "Matrix diff: shape mismatch");
        double worst = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const double d = std::abs(data_[i] - other.data_[i]);
            if (d > worst) worst = d;
        }
        return worst;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace spade
