#pragma once

#include <cstdint>

#include "hrgrad/gradient_set.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

/// A = G^T G, exactly symmetric (upper triangle computed, mirrored).
ColMatrix gram(const GradientSet& g);

/// Thin SVD M = U S V^T of a column-major D x m matrix, via one-sided Jacobi.
/// U is D x m with orthonormal columns where sigma > 0 (zero columns where
/// sigma == 0), V is m x m orthogonal, singular values descending.
struct Svd {
    ColMatrix u;
    ColMatrix v;
    Vec sigma;
    std::size_t rank(double cutoff_rel) const;
};
Svd svd(const ColMatrix& m);

struct PinvOnes {
    Vec value;            // (M^+)^T 1_m
    std::size_t rank = 0; // numerical rank at the cutoff
    bool degenerate = false;
};

/// (M^+)^T 1_m with singular values below svd_cutoff_rel * sigma_max zeroed.
/// An all-zero M yields a zero vector with degenerate = true, not an error.
PinvOnes pseudoinverse_rows_times_ones(const ColMatrix& m, const NumericTolerances& tol);

/// Solve A x = b by LU with partial pivoting. Throws DegeneracyError when a
/// pivot underflows rel_tol * max|A|.
Vec lu_solve(ColMatrix a, Vec b, double rel_tol = 1e-14);

/// Minimum-norm least squares via SVD (used as the singular-system fallback).
Vec svd_least_squares(const ColMatrix& a, const Vec& b, double cutoff_rel);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// Rayleigh-quotient stop at 1e-12 relative.
double spectral_norm_psd(const ColMatrix& a, std::uint64_t seed = 12345);

/// Random orthogonal matrix from a Householder QR of a seeded Gaussian
/// matrix, with the R diagonal sign fixed for determinism.
ColMatrix random_orthogonal(std::size_t n, std::uint64_t seed);

/// y = A x for column-major A.
Vec matvec(const ColMatrix& a, const Vec& x);

} // namespace hrgrad
