#include "hrgrad/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "hrgrad/kernels.hpp"

namespace hrgrad {

ColMatrix restore_magnitudes(const GradientSet& g, const RotationPlan& plan) {
    if (plan.angles.size() != g.tasks())
        throw InvalidInputError("restore_magnitudes: plan does not match the gradient set");
    ColMatrix out = g.matrix();
    for (std::size_t i : plan.conflicts) {
        const Vec r = rotate_unit(g.unit_exact(i), plan.references.at(i), plan.angles[i]);
        kernels::combine(g.norm(i), r.data(), 0.0, r.data(), out.col(i), g.dim());
    }
    return out;
}

FairDirection fair_direction(const ColMatrix& rotated, const NumericTolerances& tol) {
    const std::size_t d = rotated.rows(), m = rotated.cols();
    ColMatrix mnorm(d, m);
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double n = kernels::nrm2(rotated.col(j), d);
        if (n > 0.0) {
            ++nonzero;
            kernels::combine(1.0 / n, rotated.col(j), 0.0, rotated.col(j), mnorm.col(j), d);
        }
    }
    if (nonzero == 0) throw DegeneracyError("fair_direction: all columns are zero");

    const PinvOnes p = pseudoinverse_rows_times_ones(mnorm, tol);
    if (p.degenerate) throw DegeneracyError("fair_direction: pseudoinverse collapsed");

    FairDirection out;
    const double raw_norm = kernels::nrm2(p.value.data(), d);
    out.direction = normalize(p.value, tol.delta);
    out.rank_deficient = p.rank < m;
    if (!out.rank_deficient) {
        // 1^T (M^T M)^{-1} 1 equals ||(M^+)^T 1||^2, so S_c comes for free.
        out.s_c = 1.0 / raw_norm;
    } else {
        double s = 0.0;
        Vec unit_dir = normalize(p.value, 0.0);
        for (std::size_t j = 0; j < m; ++j)
            s += kernels::dot(mnorm.col(j), unit_dir.data(), d);
        out.s_c = s / static_cast<double>(m);
    }
    return out;
}

AggregationResult hrgrad_aggregate(const GradientSet& g, const MerConfig& cfg,
                                   const NumericTolerances& tol, const LossHistory* losses) {
    cfg.validate();
    tol.validate();
    const std::size_t d = g.dim(), m = g.tasks();

    AggregationResult res;
    res.rotated = g.matrix();
    res.fair_direction.assign(d, 0.0);
    res.update.assign(d, 0.0);
    res.angles.assign(m, 0.0);
    res.cosines.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        res.unit_norm_deficit =
            std::max(res.unit_norm_deficit, g.delta() / (g.norm(i) + g.delta()));

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < m; ++i)
        if (!g.is_zero(i)) live.push_back(i);
    if (live.empty()) { // joint stationary point: the zero update is exact
        res.degenerate = true;
        return res;
    }

    const GradientSet sub = live.size() == m ? g : g.select(live);
    const HarmonizedCone cone = build_cone(sub, tol);
    if (cone.degenerate) {
        res.degenerate = true;
        return res;
    }

    std::vector<Vec> units(sub.tasks());
    for (std::size_t k = 0; k < sub.tasks(); ++k) units[k] = sub.unit_exact(k);

    const std::vector<std::size_t> conflicts = cone_conflicts(units, cone.anchor, tol);
    res.inner_steps = losses != nullptr
                          ? adaptive_steps(losses->previous, losses->current, cfg, tol.delta)
                          : cfg.alpha_min_steps;
    const RotationPlan plan =
        plan_rotation(units, conflicts, cone.anchor, cfg, res.inner_steps);
    res.mer_value = plan.mer_value;

    const ColMatrix sub_rot = restore_magnitudes(sub, plan);
    const FairDirection fair = fair_direction(sub_rot, tol);
    res.rank_deficient = fair.rank_deficient;
    res.s_c = fair.s_c;
    res.fair_direction = fair.direction;

    double projection = 0.0;
    for (std::size_t k = 0; k < sub.tasks(); ++k)
        projection += kernels::dot(sub_rot.col(k), fair.direction.data(), d);
    res.update = fair.direction;
    kernels::scal(projection, res.update.data(), d);

    const double update_norm = kernels::nrm2(res.update.data(), d);
    for (std::size_t k = 0; k < sub.tasks(); ++k) {
        const std::size_t i = live[k];
        std::copy(sub_rot.col(k), sub_rot.col(k) + d, res.rotated.col(i));
        res.angles[i] = plan.angles[k];
        if (update_norm > 0.0)
            res.cosines[i] = kernels::dot(sub_rot.col(k), res.update.data(), d) /
                             (sub.norm(k) * update_norm);
    }
    for (std::size_t k : plan.conflicts) res.conflicts.push_back(live[k]);
    return res;
}

} // namespace hrgrad
