#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <vector>

namespace fgp {

// Small dense row-major matrix. Everything in this project is a handful of
// assets wide, so no linear-algebra library is pulled in.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> diag) {
        Matrix m(static_cast<int>(diag.size()), static_cast<int>(diag.size()));
        for (int i = 0; i < m.rows(); ++i) m(i, i) = diag[i];
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(int i, int j) {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    std::span<const double> row(int i) const {
        return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
    }
    std::span<double> row(int i) {
        return {data_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
    }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& other) const = default;

    double max_abs_asymmetry() const {
        double worst = 0.0;
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j)
                worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
        return worst;
    }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// z * z^T for an n x d loading matrix; the Gram form keeps the result
// symmetric positive semidefinite by construction.
inline Matrix gram(const Matrix& z) {
    Matrix g(z.rows(), z.rows());
    for (int i = 0; i < z.rows(); ++i) {
        for (int j = i; j < z.rows(); ++j) {
            double s = 0.0;
            for (int l = 0; l < z.cols(); ++l) s += z(i, l) * z(j, l);
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return g;
}

} // namespace fgp
