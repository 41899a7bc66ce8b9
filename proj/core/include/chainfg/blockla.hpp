#pragma once

#include <vector>

#include "chainfg/mat.hpp"

namespace chainfg {

enum class Phase { Evaluate, Update };

/// One pipeline phase of a Householder iteration. `column` is 1-based within
/// the call; `active_rows`/`active_cols` are the dimensions the hardware unit
/// would touch (Evaluate scans one column, Update sweeps the trailing columns
/// including the rhs).
struct PhaseLogEntry {
    Phase phase;
    int column;
    int active_rows;
    int active_cols;
};

/// Output of partial_qr. `r_top` holds the first k rows of the R factor over
/// all value columns with the transformed rhs folded in as the last column;
/// entries below its diagonal are written as exact zeros. `tail` holds the
/// un-eliminated remainder (rows k..m-1, columns k..n-1 plus rhs).
struct PartialQrResult {
    Mat r_top;
    Mat tail;
    std::vector<PhaseLogEntry> phase_log;
};

/// Partial Householder QR on an augmented m x (n+1) matrix whose last column
/// is the rhs. Eliminates the first k value columns, column by column, with
/// the reflector sign chosen so every produced diagonal entry is
/// non-negative. A zero active column yields an identity reflector (the
/// diagonal stays zero; no error). Loop bounds skip everything below the
/// diagonal of already-eliminated columns.
PartialQrResult partial_qr(const Mat& a, int k);

/// Solve r x = d for upper-triangular r. A diagonal entry whose magnitude is
/// at most 1e-12 times its column norm is treated as zero and reported with
/// its 1-based index.
Vec back_substitute(const Mat& r, const Vec& d);

/// Least-squares oracle: solves A^T A x = A^T b by Cholesky factorization of
/// the normal matrix. Deliberately shares nothing with the Householder path;
/// used by tests and the --oracle CLI mode.
Vec normal_solve_oracle(const Mat& a, const Vec& b);

/// Lower Cholesky factor of an SPD matrix; throws CovarianceError otherwise.
Mat cholesky_lower(const Mat& sigma);

/// Inverse of a lower-triangular matrix by forward substitution. The strict
/// upper triangle of the result is written as exact zeros.
Mat invert_lower_triangular(const Mat& l);

}  // namespace chainfg
