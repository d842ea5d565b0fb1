#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyadic {

/// Thrown when operand dimensions do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::string shape_string() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class ElementwiseOp { add, mul, one_minus_a_times_b };

/// out[j] = sum_i v[i] * m(i, j). Row vector times matrix.
Vector vecmat(std::span<const double> v, const Matrix& m);

/// out[j] += sum_i v[i] * m(i, j).
void vecmat_accumulate(std::span<const double> v, const Matrix& m, std::span<double> out);

/// out[i] += sum_j m(i, j) * g[j]; the transpose product used by backward passes.
void matvec_accumulate(const Matrix& m, std::span<const double> g, std::span<double> out);

/// m(i, j) += a[i] * b[j].
void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b);

Vector elementwise(std::span<const double> a, std::span<const double> b, ElementwiseOp op);

double sigmoid(double x);
Vector sigmoid(std::span<const double> x);
Vector tanh_map(std::span<const double> x);

/// Numerically stable softmax (max-subtracted).
Vector softmax(std::span<const double> logits);

/// -ln(max(probs[target], 1e-12)). Throws std::out_of_range for a bad target.
double cross_entropy(std::span<const double> probs, std::size_t target);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace dyadic
