#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "trilstm/error.hpp"

namespace trilstm {

// Dense row-major matrix of doubles. The sole numeric container for
// parameters, activations and gradients; sizes here are tiny, so no
// attempt at BLAS-level performance is made.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix filled(std::size_t rows, std::size_t cols, double value);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double value);
    void set_zero() { fill(0.0); }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
Matrix map(const Matrix& m, const std::function<double(double)>& fn);

void add_in_place(Matrix& a, const Matrix& b);
void add_scaled_in_place(Matrix& a, const Matrix& b, double s);
// acc += u * v^T for column vectors u (n x 1) and v (m x 1)
void add_outer_in_place(Matrix& acc, const Matrix& u, const Matrix& v);

// Stack column vectors on top of each other.
Matrix vconcat(const Matrix& top, const Matrix& bottom);
Matrix vconcat(const Matrix& a, const Matrix& b, const Matrix& c);
// Rows [begin, end) of a column vector.
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);

// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

// 1 x dim row with a single 1 at index.
Matrix one_hot(std::size_t index, std::size_t dim);

double elu(double x);
double sigmoid(double x);
double tanh_act(double x);

double sum_squares(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace trilstm
