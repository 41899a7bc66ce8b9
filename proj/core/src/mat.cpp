#include "chainfg/mat.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace chainfg {

std::string Mat::dump() const {
    std::string out;
    char buf[32];
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", (*this)(r, c));
            out += buf;
            out += (c + 1 == cols) ? '\n' : ' ';
        }
    }
    return out;
}

bool bit_equal(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("mat_mul: dimension mismatch");
    Mat c(a.rows, b.cols);
    for (int j = 0; j < b.cols; ++j)
        for (int k = 0; k < a.cols; ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            for (int i = 0; i < a.rows; ++i) c(i, j) += a(i, k) * bkj;
        }
    return c;
}

Vec mat_vec(const Mat& a, const Vec& x) {
    if (static_cast<int>(x.size()) != a.cols) throw std::invalid_argument("mat_vec: dimension mismatch");
    Vec y(a.rows, 0.0);
    for (int c = 0; c < a.cols; ++c) {
        const double xc = x[c];
        if (xc == 0.0) continue;
        for (int r = 0; r < a.rows; ++r) y[r] += a(r, c) * xc;
    }
    return y;
}

Mat gram(const Mat& a, int ncols) {
    Mat g(ncols, ncols);
    for (int i = 0; i < ncols; ++i)
        for (int j = i; j < ncols; ++j) {
            double s = 0.0;
            for (int r = 0; r < a.rows; ++r) s += a(r, i) * a(r, j);
            g(i, j) = s;
            g(j, i) = s;
        }
    return g;
}

Mat vstack(const Mat& top, const Mat& bottom) {
    if (top.empty()) return bottom;
    if (bottom.empty()) return top;
    if (top.cols != bottom.cols) throw std::invalid_argument("vstack: column mismatch");
    Mat out(top.rows + bottom.rows, top.cols);
    out.set_block(0, 0, top);
    out.set_block(top.rows, 0, bottom);
    return out;
}

double inf_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double two_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_abs_diff(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double frobenius(const Mat& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace chainfg
