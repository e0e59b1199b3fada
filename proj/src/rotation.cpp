#include "hrgrad/rotation.hpp"

#include <algorithm>
#include <cmath>

#include "hrgrad/gradient_set.hpp"
#include "hrgrad/kernels.hpp"

namespace hrgrad {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

double anchor_dot(const Vec& u, const Vec& anchor) {
    return kernels::dot(u.data(), anchor.data(), u.size());
}

// Smallest angle for which the rotated direction stops opposing the anchor:
// 0 when the alignment c is already nonnegative, atan(-c / sqrt(1 - c^2))
// otherwise (pi/2 in the anti-parallel limit).
double feasibility_floor(double c) {
    if (c >= 0.0) return 0.0;
    const double s2 = 1.0 - c * c;
    if (s2 <= 0.0) return kHalfPi;
    return std::min(kHalfPi, std::atan(-c / std::sqrt(s2)));
}

} // namespace

std::vector<std::size_t> detect_conflicts(const std::vector<Vec>& units, const Vec& anchor,
                                          const NumericTolerances& tol) {
    if (kernels::nrm2(anchor.data(), anchor.size()) == 0.0)
        throw DegeneracyError("detect_conflicts: anchor is the zero vector");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < units.size(); ++i)
        if (anchor_dot(units[i], anchor) < -tol.conflict_tol) out.push_back(i);
    return out;
}

std::vector<std::size_t> cone_conflicts(const std::vector<Vec>& units, const Vec& anchor,
                                        const NumericTolerances& tol) {
    std::vector<std::size_t> out = detect_conflicts(units, anchor, tol);
    const std::size_t m = units.size();
    std::vector<bool> in(m, false);
    for (std::size_t i : out) in[i] = true;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            if (in[i] && in[j]) continue;
            if (kernels::dot(units[i].data(), units[j].data(), units[i].size()) <
                -tol.conflict_tol) {
                in[i] = true;
                in[j] = true;
            }
        }
    out.clear();
    for (std::size_t i = 0; i < m; ++i)
        if (in[i]) out.push_back(i);
    return out;
}

Vec rotate_unit(std::span<const double> g, std::span<const double> w, double alpha) {
    if (g.size() != w.size()) throw InvalidInputError("rotate_unit: size mismatch");
    if (std::abs(kernels::dot(g.data(), w.data(), g.size())) > 1e-10)
        throw ContractError("rotate_unit: inputs are not orthogonal");
    if (!(alpha >= 0.0) || alpha > kHalfPi + 1e-15)
        throw ContractError("rotate_unit: angle outside [0, pi/2]");
    Vec out(g.size());
    kernels::combine(std::cos(alpha), g.data(), std::sin(alpha), w.data(), out.data(), g.size());
    return out;
}

Vec rotation_reference(std::span<const double> unit, const Vec& anchor) {
    const double c = kernels::dot(unit.data(), anchor.data(), unit.size());
    Vec resid(unit.size());
    kernels::combine(1.0, anchor.data(), -c, unit.data(), resid.data(), unit.size());
    const double rn = kernels::nrm2(resid.data(), resid.size());
    if (rn <= 1e-12) return {};
    // Exact normalization: a stabilized unit would carry a delta/rn norm
    // deficit that the orthogonality contract of rotate_unit cannot absorb.
    kernels::scal(1.0 / rn, resid.data(), resid.size());
    return resid;
}

double mer_objective(const Vec& angles, const std::vector<Vec>& units,
                     const std::map<std::size_t, Vec>& references,
                     const std::vector<std::size_t>& conflicts, double lambda) {
    const std::size_t m = units.size();
    if (angles.size() != m) throw InvalidInputError("mer_objective: angle count mismatch");
    std::vector<bool> in(m, false);
    for (std::size_t i : conflicts) in[i] = true;
    for (std::size_t i = 0; i < m; ++i)
        if (!in[i] && angles[i] != 0.0)
            throw ContractError("mer_objective: nonzero angle outside the conflict set");

    std::vector<Vec> r(m);
    for (std::size_t i = 0; i < m; ++i)
        r[i] = in[i] ? rotate_unit(units[i], references.at(i), angles[i]) : units[i];

    double align = 0.0;
    if (m > 1) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                align += 1.0 - kernels::dot(r[i].data(), r[j].data(), r[i].size());
        align /= static_cast<double>(m) * static_cast<double>(m - 1);
    }
    double prox = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        Vec diff(r[i].size());
        kernels::combine(1.0, r[i].data(), -1.0, units[i].data(), diff.data(), r[i].size());
        prox += kernels::nrm2sq(diff.data(), diff.size());
    }
    return align + lambda / (4.0 * static_cast<double>(m)) * prox;
}

int adaptive_steps(const Vec& prev_losses, const Vec& curr_losses, const MerConfig& cfg,
                   double delta) {
    if (prev_losses.size() != curr_losses.size())
        throw InvalidInputError("adaptive_steps: length mismatch");
    const std::size_t m = prev_losses.size();
    if (m == 0) return cfg.alpha_min_steps;
    Vec rel(m);
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        rel[i] = (curr_losses[i] - prev_losses[i]) / (prev_losses[i] + delta);
        if (!std::isfinite(rel[i]))
            throw InvalidInputError("adaptive_steps: non-finite relative change");
        mean += rel[i];
    }
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double x : rel) var += (x - mean) * (x - mean);
    const double s = std::sqrt(var / static_cast<double>(m));
    const double frac = s / (s + cfg.k_std);
    return static_cast<int>(std::floor(cfg.alpha_min_steps +
                                       (cfg.alpha_max_steps - cfg.alpha_min_steps) * frac));
}

RotationPlan optimize_angles(const std::vector<Vec>& units,
                             const std::map<std::size_t, Vec>& references,
                             const std::vector<std::size_t>& conflicts, const Vec& anchor,
                             const MerConfig& cfg, int steps) {
    cfg.validate();
    const std::size_t m = units.size();
    RotationPlan plan;
    plan.conflicts = conflicts;
    std::sort(plan.conflicts.begin(), plan.conflicts.end());
    plan.references = references;
    plan.angles.assign(m, 0.0);
    plan.alpha_lower.assign(m, 0.0);
    if (plan.conflicts.empty()) {
        plan.mer_value = mer_objective(plan.angles, units, plan.references, plan.conflicts,
                                       cfg.lambda);
        return plan;
    }

    for (std::size_t i : plan.conflicts) {
        const double c = anchor_dot(units[i], anchor);
        plan.alpha_lower[i] = feasibility_floor(c);
        plan.angles[i] = plan.alpha_lower[i];
    }

    // Rotated directions and the analytic objective gradient. With
    // r_i' = -sin(a_i) u_i + cos(a_i) w_i the alignment part contributes
    // -r_i' . (S - r_i) / (m(m-1)) and the proximity part lambda sin(a_i)/(2m).
    const std::size_t d = units.empty() ? 0 : units[0].size();
    auto gradient = [&](const Vec& angles, Vec& grad_out) {
        std::vector<Vec> r(m);
        std::vector<bool> in(m, false);
        for (std::size_t i : plan.conflicts) in[i] = true;
        for (std::size_t i = 0; i < m; ++i)
            r[i] = in[i] ? rotate_unit(units[i], plan.references.at(i), angles[i]) : units[i];
        Vec sum(d, 0.0);
        for (std::size_t i = 0; i < m; ++i) kernels::axpy(1.0, r[i].data(), sum.data(), d);
        grad_out.assign(m, 0.0);
        const double pair_scale =
            m > 1 ? 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1)) : 0.0;
        for (std::size_t i : plan.conflicts) {
            Vec rp(d);
            kernels::combine(-std::sin(angles[i]), units[i].data(), std::cos(angles[i]),
                             plan.references.at(i).data(), rp.data(), d);
            const double dot_others = kernels::dot(rp.data(), sum.data(), d) -
                                      kernels::dot(rp.data(), r[i].data(), d);
            grad_out[i] = -pair_scale * dot_others +
                          cfg.lambda / (2.0 * static_cast<double>(m)) * std::sin(angles[i]);
        }
    };

    double lr = cfg.inner_lr;
    double value = mer_objective(plan.angles, units, plan.references, plan.conflicts, cfg.lambda);
    Vec grad;
    for (int it = 0; it < steps; ++it) {
        gradient(plan.angles, grad);
        bool accepted = false;
        for (int h = 0; h <= 10; ++h) {
            Vec cand = plan.angles;
            for (std::size_t i : plan.conflicts)
                cand[i] = std::clamp(cand[i] - lr * grad[i], plan.alpha_lower[i], kHalfPi);
            const double cand_value =
                mer_objective(cand, units, plan.references, plan.conflicts, cfg.lambda);
            if (cand_value <= value + 1e-12) {
                plan.angles = std::move(cand);
                value = cand_value;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) break;
    }
    plan.mer_value = value;
    return plan;
}

RotationPlan plan_rotation(const std::vector<Vec>& units, const std::vector<std::size_t>& conflicts,
                           const Vec& anchor, const MerConfig& cfg, int steps) {
    std::map<std::size_t, Vec> refs;
    std::vector<std::size_t> usable;
    for (std::size_t i : conflicts) {
        Vec w = rotation_reference(units[i], anchor);
        if (w.empty()) continue; // already parallel to the anchor, nothing to rotate
        refs.emplace(i, std::move(w));
        usable.push_back(i);
    }
    return optimize_angles(units, refs, usable, anchor, cfg, steps);
}

} // namespace hrgrad
