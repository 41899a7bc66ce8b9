#include "chainfg/blockla.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chainfg/errors.hpp"

namespace chainfg {

PartialQrResult partial_qr(const Mat& a, int k) {
    const int m = a.rows;
    const int ncols = a.cols;
    if (ncols < 2) throw std::invalid_argument("partial_qr: need at least one value column plus rhs");
    const int n = ncols - 1;  // value columns
    if (k < 1 || k > std::min(m, n))
        throw std::invalid_argument("partial_qr: k = " + std::to_string(k) + " outside [1, min(" +
                                    std::to_string(m) + ", " + std::to_string(n) + ")]");
    if (!a.all_finite()) throw std::invalid_argument("partial_qr: non-finite input entry");

    Mat w = a;
    std::vector<PhaseLogEntry> log;
    log.reserve(2 * static_cast<std::size_t>(k));
    Vec v(m, 0.0);

    for (int j = 0; j < k; ++j) {
        const int active_rows = m - j;
        log.push_back({Phase::Evaluate, j + 1, active_rows, 1});

        // Evaluate: reflector from the active part of column j.
        const double x0 = w(j, j);
        double sigma = 0.0;
        for (int i = j + 1; i < m; ++i) sigma += w(i, j) * w(i, j);
        const double alpha = std::sqrt(x0 * x0 + sigma);

        double beta = 0.0;
        if (alpha > 0.0) {
            // v0 = x0 - alpha, computed without cancellation when x0 > 0.
            const double v0 = (x0 <= 0.0) ? x0 - alpha : -sigma / (x0 + alpha);
            if (v0 != 0.0) {
                beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
                v[j] = 1.0;
                for (int i = j + 1; i < m; ++i) v[i] = w(i, j) / v0;
            }
        }

        // Column j is final: non-negative diagonal, exact zeros below.
        w(j, j) = alpha;
        for (int i = j + 1; i < m; ++i) w(i, j) = 0.0;

        // Update: apply the reflector to the trailing columns (and rhs).
        const int active_cols = ncols - 1 - j;
        log.push_back({Phase::Update, j + 1, active_rows, active_cols});
        if (beta != 0.0) {
            for (int c = j + 1; c < ncols; ++c) {
                double dot = w(j, c);  // v[j] == 1
                for (int i = j + 1; i < m; ++i) dot += v[i] * w(i, c);
                const double s = beta * dot;
                w(j, c) -= s;
                for (int i = j + 1; i < m; ++i) w(i, c) -= s * v[i];
            }
        }
    }

    PartialQrResult out;
    out.r_top = w.block(0, 0, k, ncols);
    out.tail = (m > k) ? w.block(k, k, m - k, ncols - k) : Mat(0, ncols - k);
    out.phase_log = std::move(log);
    return out;
}

Vec back_substitute(const Mat& r, const Vec& d) {
    const int n = r.rows;
    if (r.cols != n) throw std::invalid_argument("back_substitute: matrix not square");
    if (static_cast<int>(d.size()) != n) throw std::invalid_argument("back_substitute: rhs size mismatch");

    Vec x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double colnorm = 0.0;
        for (int j = 0; j <= i; ++j) colnorm += r(j, i) * r(j, i);
        colnorm = std::sqrt(colnorm);
        if (std::abs(r(i, i)) <= 1e-12 * colnorm)
            throw SingularSystemError("back_substitute: zero pivot at index " + std::to_string(i + 1), i + 1);
        double s = d[i];
        for (int c = i + 1; c < n; ++c) s -= r(i, c) * x[c];
        x[i] = s / r(i, i);
    }
    return x;
}

Vec normal_solve_oracle(const Mat& a, const Vec& b) {
    if (static_cast<int>(b.size()) != a.rows)
        throw std::invalid_argument("normal_solve_oracle: rhs size mismatch");
    const int n = a.cols;
    Mat g = gram(a, n);
    Vec y(n, 0.0);
    for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int r = 0; r < a.rows; ++r) s += a(r, c) * b[r];
        y[c] = s;
    }

    // In-place lower Cholesky of the normal matrix.
    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = g(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 1e-12 * std::abs(g(j, j))) || !std::isfinite(diag))
            throw SingularSystemError("normal_solve_oracle: normal matrix singular at index " + std::to_string(j + 1),
                                      j + 1);
        l(j, j) = std::sqrt(diag);
        for (int i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }

    // Forward then backward substitution.
    Vec z(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = y[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    Vec x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = z[i];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

Mat cholesky_lower(const Mat& sigma) {
    const int n = sigma.rows;
    if (sigma.cols != n) throw CovarianceError("covariance not square");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (sigma(i, j) != sigma(j, i)) throw CovarianceError("covariance not symmetric");

    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = sigma(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) throw CovarianceError("covariance not positive definite");
        l(j, j) = std::sqrt(diag);
        for (int i = j + 1; i < n; ++i) {
            double s = sigma(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Mat invert_lower_triangular(const Mat& l) {
    const int n = l.rows;
    Mat w(n, n);
    for (int c = 0; c < n; ++c) {
        // Solve l * w[:,c] = e_c; rows above c stay exact zero.
        w(c, c) = 1.0 / l(c, c);
        for (int i = c + 1; i < n; ++i) {
            double s = 0.0;
            for (int k = c; k < i; ++k) s += l(i, k) * w(k, c);
            w(i, c) = -s / l(i, i);
        }
    }
    return w;
}

}  // namespace chainfg
