#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace phasetr {

// Compressed sparse row matrix. Column indices are sorted and unique within
// each row; assembly routines guarantee this.
struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_offsets;  // size n_rows + 1
    std::vector<int> col_indices;
    std::vector<double> values;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        if (static_cast<int>(x.size()) != n_cols)
            throw std::invalid_argument("SparseMatrix::multiply: size mismatch");
        y.assign(n_rows, 0.0);
        for (int r = 0; r < n_rows; ++r) {
            double s = 0.0;
            for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
                s += values[k] * x[col_indices[k]];
            y[r] = s;
        }
    }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y;
        multiply(x, y);
        return y;
    }

    // x^T A x
    double quadratic(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != n_cols)
            throw std::invalid_argument("SparseMatrix::quadratic: size mismatch");
        double s = 0.0;
        for (int r = 0; r < n_rows; ++r) {
            double row = 0.0;
            for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
                row += values[k] * x[col_indices[k]];
            s += x[r] * row;
        }
        return s;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n_rows, 0.0);
        for (int r = 0; r < n_rows; ++r) {
            for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
                if (col_indices[k] == r) d[r] = values[k];
        }
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    // max_{ij} |A_ij - A_ji|; assumes structural symmetry of the pattern,
    // entries missing on one side count with value 0.
    double symmetry_defect() const {
        double defect = 0.0;
        for (int r = 0; r < n_rows; ++r) {
            for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
                const int c = col_indices[k];
                double transposed = 0.0;
                const int lo = row_offsets[c], hi = row_offsets[c + 1];
                const int* begin = col_indices.data() + lo;
                const int* end = col_indices.data() + hi;
                const int* it = std::lower_bound(begin, end, r);
                if (it != end && *it == r) transposed = values[lo + (it - begin)];
                defect = std::max(defect, std::abs(values[k] - transposed));
            }
        }
        return defect;
    }

    double& coeff_ref(int r, int c) {
        for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
            if (col_indices[k] == c) return values[k];
        throw std::out_of_range("SparseMatrix::coeff_ref: entry not in pattern");
    }

    double coeff(int r, int c) const {
        for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
            if (col_indices[k] == c) return values[k];
        return 0.0;
    }
};

// Builds a CSR matrix with a fixed pattern from a list of (row, col) pairs,
// then accumulates entries. Pattern construction is deterministic.
class CsrAccumulator {
public:
    CsrAccumulator(int n_rows, int n_cols, const std::vector<std::pair<int, int>>& pattern)
        : mat_{} {
        mat_.n_rows = n_rows;
        mat_.n_cols = n_cols;
        std::vector<std::vector<int>> rows(n_rows);
        for (const auto& [r, c] : pattern) rows[r].push_back(c);
        mat_.row_offsets.assign(n_rows + 1, 0);
        for (int r = 0; r < n_rows; ++r) {
            auto& cols = rows[r];
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            mat_.row_offsets[r + 1] = mat_.row_offsets[r] + static_cast<int>(cols.size());
        }
        mat_.col_indices.reserve(mat_.row_offsets[n_rows]);
        for (int r = 0; r < n_rows; ++r)
            mat_.col_indices.insert(mat_.col_indices.end(), rows[r].begin(), rows[r].end());
        mat_.values.assign(mat_.col_indices.size(), 0.0);
    }

    void add(int r, int c, double v) {
        const int lo = mat_.row_offsets[r], hi = mat_.row_offsets[r + 1];
        const int* begin = mat_.col_indices.data() + lo;
        const int* end = mat_.col_indices.data() + hi;
        const int* it = std::lower_bound(begin, end, c);
        mat_.values[lo + (it - begin)] += v;
    }

    SparseMatrix take() { return std::move(mat_); }

private:
    SparseMatrix mat_;
};

// z = a*x + b*y, elementwise helpers used throughout the solvers.
inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace phasetr
