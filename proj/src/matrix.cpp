#include "trilstm/matrix.hpp"

#include <cmath>
#include <string>

namespace trilstm {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + shape_str(*this));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw ShapeError("ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
    Matrix m(rows, cols);
    m.fill(value);
    return m;
}

double& Matrix::at(std::size_t r, std::size_t c) {
    if (r >= rows_ || c >= cols_)
        throw BoundsError("matrix index (" + std::to_string(r) + "," + std::to_string(c) +
                          ") out of range for " + shape_str(*this));
    return data_[r * cols_ + c];
}

double Matrix::at(std::size_t r, std::size_t c) const {
    return const_cast<Matrix&>(*this).at(r, c);
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul shape mismatch: " + shape_str(a) + " * " + shape_str(b));
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double* A = a.data();
    const double* B = b.data();
    double* C = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = A + i * k;
        double* ci = C + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = B + p * m;
            for (std::size_t j = 0; j < m; ++j)
                ci[j] += aip * bp[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(c, r) = m(r, c);
    return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + " shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
}

} // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.raw()[i] += b.raw()[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.raw()[i] -= b.raw()[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.raw()[i] *= b.raw()[i];
    return out;
}

Matrix scale(const Matrix& m, double s) {
    Matrix out = m;
    for (double& v : out.raw())
        v *= s;
    return out;
}

Matrix map(const Matrix& m, const std::function<double(double)>& fn) {
    Matrix out = m;
    for (double& v : out.raw())
        v = fn(v);
    return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.size(); ++i)
        a.raw()[i] += b.raw()[i];
}

void add_scaled_in_place(Matrix& a, const Matrix& b, double s) {
    require_same_shape(a, b, "add_scaled_in_place");
    for (std::size_t i = 0; i < a.size(); ++i)
        a.raw()[i] += s * b.raw()[i];
}

void add_outer_in_place(Matrix& acc, const Matrix& u, const Matrix& v) {
    if (u.cols() != 1 || v.cols() != 1)
        throw ShapeError("add_outer_in_place expects column vectors");
    if (acc.rows() != u.rows() || acc.cols() != v.rows())
        throw ShapeError("add_outer_in_place accumulator shape mismatch");
    for (std::size_t i = 0; i < u.rows(); ++i) {
        const double ui = u(i, 0);
        if (ui == 0.0) continue;
        double* row = acc.data() + i * acc.cols();
        for (std::size_t j = 0; j < v.rows(); ++j)
            row[j] += ui * v(j, 0);
    }
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols())
        throw ShapeError("vconcat column mismatch");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.raw().begin(), top.raw().end(), out.raw().begin());
    std::copy(bottom.raw().begin(), bottom.raw().end(), out.raw().begin() + static_cast<std::ptrdiff_t>(top.size()));
    return out;
}

Matrix vconcat(const Matrix& a, const Matrix& b, const Matrix& c) {
    return vconcat(vconcat(a, b), c);
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
    if (m.cols() != 1)
        throw ShapeError("slice_rows expects a column vector");
    if (begin > end || end > m.rows())
        throw BoundsError("slice_rows range out of bounds");
    Matrix out(end - begin, 1);
    for (std::size_t i = begin; i < end; ++i)
        out(i - begin, 0) = m(i, 0);
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double row_max = m(r, 0);
        for (std::size_t c = 1; c < m.cols(); ++c)
            row_max = std::max(row_max, m(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double e = std::exp(m(r, c) - row_max);
            out(r, c) = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(r, c) *= inv;
    }
    return out;
}

Matrix one_hot(std::size_t index, std::size_t dim) {
    if (index >= dim)
        throw BoundsError("one_hot index " + std::to_string(index) +
                          " out of range for dim " + std::to_string(dim));
    Matrix out(1, dim);
    out(0, index) = 1.0;
    return out;
}

double elu(double x) {
    return x >= 0.0 ? x : std::expm1(x);
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double tanh_act(double x) {
    return std::tanh(x);
}

double sum_squares(const Matrix& m) {
    double s = 0.0;
    for (double v : m.raw())
        s += v * v;
    return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a.raw()[i] - b.raw()[i]));
    return d;
}

} // namespace trilstm
