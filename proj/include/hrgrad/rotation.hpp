#pragma once

#include <map>

#include "hrgrad/types.hpp"

namespace hrgrad {

/// Angle-selection hyperparameters.
struct MerConfig {
    double lambda = 0.1;      // proximity weight in the angle objective
    double inner_lr = 0.1;    // projected-gradient step, radians
    int alpha_min_steps = 2;  // inner iteration bounds
    int alpha_max_steps = 20;
    double k_std = 0.1;       // saturation constant of the adaptive step count

    void validate() const {
        if (lambda < 0.0) throw InvalidInputError("MerConfig: lambda must be >= 0");
        if (!(inner_lr > 0.0) || inner_lr > 1.0)
            throw InvalidInputError("MerConfig: inner_lr must be in (0, 1]");
        if (alpha_min_steps < 1 || alpha_min_steps > alpha_max_steps)
            throw InvalidInputError("MerConfig: need 1 <= alpha_min_steps <= alpha_max_steps");
    }
};

/// Outcome of the angle optimization for one gradient set.
struct RotationPlan {
    std::vector<std::size_t> conflicts;   // sorted task indices to rotate
    std::map<std::size_t, Vec> references; // i -> unit w_i, orthogonal to unit g_i
    Vec angles;                           // length m, 0 outside the conflict set
    Vec alpha_lower;                      // per-task feasibility floor
    double mer_value = 0.0;               // objective at the returned angles
};

/// Tasks whose unit gradient has a negative alignment with the anchor:
/// { i : units_i . anchor < -conflict_tol }. Throws DegeneracyError when the
/// anchor is the zero vector.
std::vector<std::size_t> detect_conflicts(const std::vector<Vec>& units, const Vec& anchor,
                                          const NumericTolerances& tol);

/// Tasks needing rotation in the full pipeline: the anchor test above plus
/// any pairwise conflict units_i . units_j < -conflict_tol, i.e. tasks whose
/// direction is not already inside the non-conflicting region.
std::vector<std::size_t> cone_conflicts(const std::vector<Vec>& units, const Vec& anchor,
                                        const NumericTolerances& tol);

/// In-plane rotation cos(alpha) g + sin(alpha) w of two orthonormal vectors.
/// Requires |g . w| <= 1e-10 and alpha in [0, pi/2]; the result has unit norm
/// by construction.
Vec rotate_unit(std::span<const double> g, std::span<const double> w, double alpha);

/// Orthogonal reference w = U(anchor - (g . anchor) g) for a unit g, with
/// exact normalization so w stays orthogonal to g at machine precision.
/// Returns an empty vector when the residual is numerically zero (g parallel
/// to the anchor).
Vec rotation_reference(std::span<const double> unit, const Vec& anchor);

/// Mean pairwise misalignment of the rotated directions plus the scaled mean
/// squared deviation from the originals:
///   1/(m(m-1)) sum_{i<j} [1 - r_i . r_j]  +  lambda/(4m) sum_i ||r_i - u_i||^2.
/// The first term is defined as 0 for m = 1. Angles must be 0 outside the
/// conflict set.
double mer_objective(const Vec& angles, const std::vector<Vec>& units,
                     const std::map<std::size_t, Vec>& references,
                     const std::vector<std::size_t>& conflicts, double lambda);

/// Inner iteration budget from the spread of relative per-task loss changes:
/// floor(min + (max - min) * s / (s + k_std)) with s the population standard
/// deviation of (L_i - L_i_prev) / (L_i_prev + delta).
int adaptive_steps(const Vec& prev_losses, const Vec& curr_losses, const MerConfig& cfg,
                   double delta);

/// Projected gradient descent on the angle objective over the conflict set,
/// clamped to [alpha_lower_i, pi/2] and started at the feasibility floor.
/// The step size is halved (at most 10 times) whenever a step would increase
/// the objective, so accepted iterates are non-increasing.
RotationPlan optimize_angles(const std::vector<Vec>& units,
                             const std::map<std::size_t, Vec>& references,
                             const std::vector<std::size_t>& conflicts, const Vec& anchor,
                             const MerConfig& cfg, int steps);

/// Convenience: references + angle optimization in one call.
RotationPlan plan_rotation(const std::vector<Vec>& units, const std::vector<std::size_t>& conflicts,
                           const Vec& anchor, const MerConfig& cfg, int steps);

} // namespace hrgrad
