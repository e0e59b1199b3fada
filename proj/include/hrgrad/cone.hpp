#pragma once

#include "hrgrad/gradient_set.hpp"
#include "hrgrad/linalg.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

/// Extreme rays of the feasible weight region together with their images in
/// gradient space and the anchor direction used by the rotation stage.
struct HarmonizedCone {
    std::vector<Vec> weight_rays;   // unit vectors in R^m, componentwise >= 0
    std::vector<Vec> physical_rays; // G * pi_j for the surviving rays
    Vec anchor;                     // unit-or-zero vector in R^D
    bool degenerate = false;        // true iff no nonzero physical ray exists
};

/// Extreme rays of {lambda in R^m : lambda >= 0, A lambda >= 0} for a
/// symmetric PSD A, by incremental double description: seed with the
/// nonnegative-orthant generators, insert the rows of A one at a time,
/// combine adjacent (positive, negative) ray pairs on each new hyperplane
/// and keep only combinatorially adjacent pairs (zero-set inclusion test).
/// Rays come back unit-normalized and lexicographically sorted.
///
/// Limits: m <= 16 and at most 512 live rays (SizeLimitError beyond).
std::vector<Vec> extreme_rays(const ColMatrix& a, const NumericTolerances& tol);

/// Weight rays of the Gram constraint, their physical images r_j = G pi_j,
/// and the anchor U(sum_j U(r_j)). Physical rays with norm below
/// cone_zero_tol * max_i ||g_i|| are dropped; if none survive the cone is
/// flagged degenerate and the anchor is the zero vector.
HarmonizedCone build_cone(const GradientSet& g, const NumericTolerances& tol);

} // namespace hrgrad
