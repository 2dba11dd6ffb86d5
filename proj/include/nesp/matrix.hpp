#pragma once

#include <cstddef>
#include <vector>

#include "nesp/common.hpp"

namespace nesp {

// Dense row-major matrix of doubles. Used for raw data, PCA output and
// anything rectangular that flows between modules.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double* row(std::size_t i) { return values.data() + i * cols; }
    const double* row(std::size_t i) const { return values.data() + i * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
};

// 2-D layout, one (x, y) pair per point.
struct Embedding {
    std::size_t n = 0;
    std::vector<double> coords; // 2*n, interleaved x,y

    Embedding() = default;
    explicit Embedding(std::size_t n_points) : n(n_points), coords(2 * n_points, 0.0) {}

    double* point(std::size_t i) { return coords.data() + 2 * i; }
    const double* point(std::size_t i) const { return coords.data() + 2 * i; }
    double& x(std::size_t i) { return coords[2 * i]; }
    double& y(std::size_t i) { return coords[2 * i + 1]; }
    double x(std::size_t i) const { return coords[2 * i]; }
    double y(std::size_t i) const { return coords[2 * i + 1]; }

    Matrix as_matrix() const {
        Matrix m(n, 2);
        m.values = coords;
        return m;
    }
    static Embedding from_matrix(const Matrix& m) {
        if (m.cols != 2) throw UsageError("embedding requires an n x 2 matrix");
        Embedding e(m.rows);
        e.coords = m.values;
        return e;
    }
};

// Per-point 2-D force (or gradient) vectors. z_sum carries the global
// partition-function accumulation when the producing kernel defines one.
struct ForceField {
    std::size_t n = 0;
    std::vector<double> values; // 2*n
    double z_sum = 0.0;

    ForceField() = default;
    explicit ForceField(std::size_t n_points) : n(n_points), values(2 * n_points, 0.0) {}

    double* point(std::size_t i) { return values.data() + 2 * i; }
    const double* point(std::size_t i) const { return values.data() + 2 * i; }
};

inline double squared_distance2(const double* a, const double* b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

} // namespace nesp
