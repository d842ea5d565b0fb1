#include "dyadic/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dyadic {

namespace {

std::string vec_shape(std::size_t n) { return "[" + std::to_string(n) + "]"; }

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": dimension mismatch " + vec_shape(a) + " vs " +
                         vec_shape(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
    }
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require_same_dim(rows[r].size(), m.cols(), "Matrix::from_rows");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

std::string Matrix::shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

Vector vecmat(std::span<const double> v, const Matrix& m) {
    Vector out(m.cols(), 0.0);
    vecmat_accumulate(v, m, out);
    return out;
}

void vecmat_accumulate(std::span<const double> v, const Matrix& m, std::span<double> out) {
    if (v.size() != m.rows() || out.size() != m.cols()) {
        throw ShapeError("vecmat: vector " + vec_shape(v.size()) + " times matrix " +
                         m.shape_string() + " into " + vec_shape(out.size()));
    }
    const std::size_t cols = m.cols();
    const double* row = m.data().data();
    for (std::size_t i = 0; i < v.size(); ++i, row += cols) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) out[j] += vi * row[j];
    }
}

void matvec_accumulate(const Matrix& m, std::span<const double> g, std::span<double> out) {
    if (g.size() != m.cols() || out.size() != m.rows()) {
        throw ShapeError("matvec: matrix " + m.shape_string() + " times vector " +
                         vec_shape(g.size()) + " into " + vec_shape(out.size()));
    }
    const std::size_t cols = m.cols();
    const double* row = m.data().data();
    for (std::size_t i = 0; i < out.size(); ++i, row += cols) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * g[j];
        out[i] += acc;
    }
}

void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b) {
    if (a.size() != m.rows() || b.size() != m.cols()) {
        throw ShapeError("add_outer: " + vec_shape(a.size()) + " x " + vec_shape(b.size()) +
                         " into " + m.shape_string());
    }
    const std::size_t cols = m.cols();
    double* row = m.data().data();
    for (std::size_t i = 0; i < a.size(); ++i, row += cols) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) row[j] += ai * b[j];
    }
}

Vector elementwise(std::span<const double> a, std::span<const double> b, ElementwiseOp op) {
    require_same_dim(a.size(), b.size(), "elementwise");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        switch (op) {
            case ElementwiseOp::add: out[i] = a[i] + b[i]; break;
            case ElementwiseOp::mul: out[i] = a[i] * b[i]; break;
            case ElementwiseOp::one_minus_a_times_b: out[i] = (1.0 - a[i]) * b[i]; break;
        }
    }
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> x) {
    Vector out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return sigmoid(v); });
    return out;
}

Vector tanh_map(std::span<const double> x) {
    Vector out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return std::tanh(v); });
    return out;
}

Vector softmax(std::span<const double> logits) {
    Vector out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
    if (target >= probs.size()) {
        throw std::out_of_range("cross_entropy: target " + std::to_string(target) +
                                " out of range for " + std::to_string(probs.size()) + " classes");
    }
    return -std::log(std::max(probs[target], 1e-12));
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_dim(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace dyadic
