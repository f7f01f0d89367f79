#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "pnn/errors.hpp"

namespace pnn {

/// Dense vector of doubles.
struct Vector {
    std::vector<double> data;

    Vector() = default;
    explicit Vector(std::size_t len, double fill = 0.0) : data(len, fill) {}
    Vector(std::initializer_list<double> init) : data(init) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool operator==(const Vector&) const = default;
};

/// Dense row-major matrix of doubles. Dimensions are fixed at construction
/// and must be positive.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {
        if (r == 0 || c == 0)
            throw DimensionError(detail::msg("matrix dimensions must be positive, got ", r, "x", c));
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

/// result[i] = sum_j m[i,j] * v[j]
inline Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size())
        throw DimensionError(detail::msg("matvec: matrix is ", m.rows, "x", m.cols,
                                         " but vector has length ", v.size()));
    Vector out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) sum += row[j] * v.data[j];
        out.data[i] = sum;
    }
    return out;
}

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DimensionError(detail::msg("add: vector lengths differ, ", a.size(), " vs ", b.size()));
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

/// result[i,j] = a[i] * b[j]
inline Matrix outer(const Vector& a, const Vector& b) {
    if (a.size() == 0 || b.size() == 0)
        throw DimensionError("outer: operands must be nonempty");
    Matrix out(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double* row = out.data.data() + i * b.size();
        for (std::size_t j = 0; j < b.size(); ++j) row[j] = a.data[i] * b.data[j];
    }
    return out;
}

/// result[j] = sum_i m[i,j] * v[i]. Accumulates over i in ascending order so
/// the result is bit-identical to matvec on the explicitly transposed matrix.
inline Vector transpose_matvec(const Matrix& m, const Vector& v) {
    if (m.rows != v.size())
        throw DimensionError(detail::msg("transpose_matvec: matrix is ", m.rows, "x", m.cols,
                                         " but vector has length ", v.size()));
    Vector out(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v.data[i];
        for (std::size_t j = 0; j < m.cols; ++j) out.data[j] += row[j] * vi;
    }
    return out;
}

}  // namespace pnn
