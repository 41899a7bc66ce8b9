#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace chainfg {

using Vec = std::vector<double>;

/// Dense column-major matrix of doubles. Column-major storage is part of the
/// contract; the textual dump used by golden tests is row-major (%.17g,
/// space-separated, one line per row).
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(c) * rows + r]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(c) * rows + r]; }

    bool empty() const { return rows == 0 || cols == 0; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Mat block(int r0, int c0, int h, int w) const {
        Mat out(h, w);
        for (int c = 0; c < w; ++c)
            for (int r = 0; r < h; ++r) out(r, c) = (*this)(r0 + r, c0 + c);
        return out;
    }

    void set_block(int r0, int c0, const Mat& b) {
        for (int c = 0; c < b.cols; ++c)
            for (int r = 0; r < b.rows; ++r) (*this)(r0 + r, c0 + c) = b(r, c);
    }

    Vec col(int c) const {
        Vec out(rows);
        for (int r = 0; r < rows; ++r) out[r] = (*this)(r, c);
        return out;
    }

    void set_col(int c, const Vec& v) {
        for (int r = 0; r < rows; ++r) (*this)(r, c) = v[r];
    }

    Mat transposed() const {
        Mat out(cols, rows);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) out(c, r) = (*this)(r, c);
        return out;
    }

    std::string dump() const;
};

bool bit_equal(const Mat& a, const Mat& b);

Mat mat_mul(const Mat& a, const Mat& b);
Vec mat_vec(const Mat& a, const Vec& x);
/// Gram matrix of the first `ncols` columns (a[:,0:ncols]^T a[:,0:ncols]).
Mat gram(const Mat& a, int ncols);
Mat vstack(const Mat& top, const Mat& bottom);

double inf_norm(const Vec& v);
double two_norm(const Vec& v);
double max_abs_diff(const Vec& a, const Vec& b);
double frobenius(const Mat& a);

}  // namespace chainfg
