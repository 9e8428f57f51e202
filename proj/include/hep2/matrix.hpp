#ifndef HEP2_MATRIX_HPP
#define HEP2_MATRIX_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hep2 {

/// Dense row-major matrix of doubles. Rows are samples, columns are features.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * size_t(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimensions");
    }

    double& at(int r, int c) { return v[size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[size_t(r) * cols + c]; }

    const double* row(int r) const { return v.data() + size_t(r) * cols; }
    double* row(int r) { return v.data() + size_t(r) * cols; }

    void push_row(const std::vector<double>& x) {
        if (rows == 0 && cols == 0) cols = int(x.size());
        if (int(x.size()) != cols) throw std::invalid_argument("Matrix::push_row: width mismatch");
        v.insert(v.end(), x.begin(), x.end());
        ++rows;
    }

    std::vector<double> row_vec(int r) const {
        return std::vector<double>(row(r), row(r) + cols);
    }

    /// New matrix holding the listed rows, in the given order.
    Matrix select_rows(const std::vector<int>& idx) const {
        Matrix out(int(idx.size()), cols);
        for (size_t i = 0; i < idx.size(); ++i)
            for (int c = 0; c < cols; ++c) out.at(int(i), c) = at(idx[i], c);
        return out;
    }

    /// New matrix holding the listed columns, in the given order.
    Matrix select_cols(const std::vector<int>& idx) const {
        Matrix out(rows, int(idx.size()));
        for (int r = 0; r < rows; ++r)
            for (size_t j = 0; j < idx.size(); ++j) out.at(r, int(j)) = at(r, idx[j]);
        return out;
    }
};

} // namespace hep2

#endif
