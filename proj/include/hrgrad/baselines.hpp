#pragma once

#include <cstdint>

#include "hrgrad/gradient_set.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

enum class BaselineChoice {
    PCGrad,
    IMTLG,
    ConFIG,
    AlignGrad,
    MGDAMinNorm,
    LinearScalarization,
};

struct BaselineResult {
    Vec update;
    bool degenerate = false;   // collapsed direction, near-zero update returned
    bool lsq_fallback = false; // singular weight system solved in least squares
    Vec weights;               // combination weights where the method defines them
    double align_score = 0.0;  // alignment score (AlignGrad only)
};

/// Sequential conflict removal: for each task the components conflicting
/// with the other tasks are projected out in a seeded random order, then the
/// surgered gradients are summed. Deterministic for a fixed seed.
BaselineResult pcgrad(const GradientSet& g, std::uint64_t permutation_seed);

/// Weighted combination with equal projections onto every unit gradient.
/// Requires m >= 2; a singular weight system falls back to least squares
/// with the flag set.
BaselineResult imtl_g(const GradientSet& g, const NumericTolerances& tol);

/// Equal-cosine direction of the raw unit gradients through the
/// pseudoinverse, scaled by the total projection length. Near anti-parallel
/// inputs collapse to a near-zero update with the degenerate flag.
BaselineResult config_dir(const GradientSet& g, const NumericTolerances& tol);

/// Normalized sum of unit gradients scaled by the total projection length;
/// also reports the alignment score 2 ||mean unit||^2 - 1.
BaselineResult aligngrad(const GradientSet& g, const NumericTolerances& tol);

/// Minimum-norm point of the convex hull of the unit gradients by away-step
/// Frank-Wolfe with exact line search; stops at duality gap 1e-10. The
/// default budget is generous so the gap criterion, not the budget, binds.
BaselineResult mgda_minnorm(const GradientSet& g, int max_iter = 20000);

/// G w for fixed nonnegative weights.
BaselineResult linear_scalarization(const GradientSet& g, const Vec& weights);

struct BaselineOptions {
    NumericTolerances tol;
    std::uint64_t seed = 0;   // projection order for the surgery method
    Vec ls_weights;           // fixed weights; empty means uniform ones
    int mgda_max_iter = 20000;
};

/// Uniform dispatcher over the methods above. A DegeneracyError from the
/// underlying method is mapped to a zero update with the flag set, so
/// sweep drivers can keep stepping.
BaselineResult run_baseline(BaselineChoice choice, const GradientSet& g,
                            const BaselineOptions& opt = {});

const char* baseline_name(BaselineChoice c);

} // namespace hrgrad
