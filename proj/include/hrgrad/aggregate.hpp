#pragma once

#include <optional>

#include "hrgrad/cone.hpp"
#include "hrgrad/gradient_set.hpp"
#include "hrgrad/rotation.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

/// Per-task losses from the previous and current round, used to size the
/// inner angle-optimization budget.
struct LossHistory {
    Vec previous;
    Vec current;
};

struct AggregationResult {
    ColMatrix rotated;      // D x m, norm-preserving rotations applied
    Vec fair_direction;     // unit consensus direction (zero when degenerate)
    double s_c = 0.0;       // common cosine of the rotated tasks with the update
    Vec update;             // final aggregated gradient
    // diagnostics
    Vec angles;             // optimized rotation angle per task
    Vec cosines;            // cos(g_i_rot, update) per task (0 for zero tasks)
    std::vector<std::size_t> conflicts;
    bool degenerate = false;      // collapsed cone or all-zero input: zero update
    bool rank_deficient = false;  // normalized rotated matrix lost column rank
    double mer_value = 0.0;
    int inner_steps = 0;
    double unit_norm_deficit = 0.0; // max_i delta / (||g_i|| + delta), record only
};

/// Column i is ||g_i|| * r_i(angles[i]) for rotated tasks, g_i unchanged
/// otherwise.
ColMatrix restore_magnitudes(const GradientSet& g, const RotationPlan& plan);

struct FairDirection {
    Vec direction;   // stabilized unit vector
    double s_c = 0.0;
    bool rank_deficient = false;
};

/// Consensus direction of a rotated matrix: normalize columns, take
/// U((M^+)^T 1_m). With full column rank S_c = 1 / sqrt(1^T (M^T M)^{-1} 1)
/// falls out of the same SVD; otherwise S_c is the mean projection and the
/// rank flag is set. Throws DegeneracyError on an all-zero matrix.
FairDirection fair_direction(const ColMatrix& rotated, const NumericTolerances& tol);

/// Full pipeline: cone + anchor, conflict detection, angle optimization,
/// magnitude restoration, fair aggregation, final update
/// (sum_i g_i_rot . g_u) g_u. Zero-norm tasks are held out of the geometry
/// and reappear as untouched zero columns. A degenerate cone (exactly
/// cancelling gradients) yields the zero update with the flag set rather
/// than an error.
AggregationResult hrgrad_aggregate(const GradientSet& g, const MerConfig& cfg,
                                   const NumericTolerances& tol,
                                   const LossHistory* losses = nullptr);

} // namespace hrgrad
