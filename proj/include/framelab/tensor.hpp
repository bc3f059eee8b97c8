#ifndef FRAMELAB_TENSOR_HPP
#define FRAMELAB_TENSOR_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace framelab {

/// Row-major dense matrix of doubles. Vectors are stored as n x 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Raw kernels on row-major storage; `a` is rows x cols.

/// y (+)= A x
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y,
            bool accumulate);
/// y += A^T x
void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
/// A += s * x y^T
void outer_acc(double* a, std::size_t rows, std::size_t cols, const double* x, const double* y,
               double s = 1.0);

} // namespace framelab

#endif // FRAMELAB_TENSOR_HPP
