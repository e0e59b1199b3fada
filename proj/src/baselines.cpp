#include "hrgrad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hrgrad/kernels.hpp"
#include "hrgrad/linalg.hpp"

namespace hrgrad {

BaselineResult pcgrad(const GradientSet& g, std::uint64_t permutation_seed) {
    const std::size_t d = g.dim(), m = g.tasks();
    std::mt19937_64 rng(permutation_seed);
    BaselineResult res;
    res.update.assign(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        Vec gi(g.column(i).begin(), g.column(i).end());
        std::vector<std::size_t> order;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) order.push_back(j);
        // Fisher-Yates with the raw engine keeps the order identical across
        // standard libraries.
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[rng() % k]);
        for (std::size_t j : order) {
            const double nj2 = g.norm(j) * g.norm(j);
            if (nj2 == 0.0) continue;
            const double dp = kernels::dot(gi.data(), g.column(j).data(), d);
            if (dp < 0.0) kernels::axpy(-dp / nj2, g.column(j).data(), gi.data(), d);
        }
        kernels::axpy(1.0, gi.data(), res.update.data(), d);
    }
    return res;
}

BaselineResult imtl_g(const GradientSet& g, const NumericTolerances& tol) {
    const std::size_t d = g.dim(), m = g.tasks();
    if (m < 2) throw InvalidInputError("imtl_g: needs at least two tasks");

    // Differences against task 0 of the raw gradients (rows of D) and of the
    // unit gradients (rows of U); the weights equalize the projections.
    const Vec u0 = g.unit_exact(0);
    ColMatrix udiff(d, m - 1), gdiff(d, m - 1);
    for (std::size_t k = 1; k < m; ++k) {
        const Vec uk = g.unit_exact(k);
        for (std::size_t r = 0; r < d; ++r) {
            udiff(r, k - 1) = u0[r] - uk[r];
            gdiff(r, k - 1) = g.column(0)[r] - g.column(k)[r];
        }
    }
    // B = D U^T restricted to the difference rows; solve B^T x = v with
    // v_l = g_0 . (u_0 - u_l).
    ColMatrix bt(m - 1, m - 1);
    Vec v(m - 1);
    for (std::size_t l = 0; l < m - 1; ++l) {
        v[l] = kernels::dot(g.column(0).data(), udiff.col(l), d);
        for (std::size_t k = 0; k < m - 1; ++k)
            bt(l, k) = kernels::dot(gdiff.col(k), udiff.col(l), d);
    }
    BaselineResult res;
    Vec tail;
    try {
        tail = lu_solve(bt, v);
    } catch (const DegeneracyError&) {
        tail = svd_least_squares(bt, v, tol.svd_cutoff_rel);
        res.lsq_fallback = true;
    }
    res.weights.assign(m, 0.0);
    double sum_tail = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
        res.weights[k] = tail[k - 1];
        sum_tail += tail[k - 1];
    }
    res.weights[0] = 1.0 - sum_tail;
    res.update.assign(d, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        kernels::axpy(res.weights[k], g.column(k).data(), res.update.data(), d);
    return res;
}

BaselineResult config_dir(const GradientSet& g, const NumericTolerances& tol) {
    const std::size_t d = g.dim(), m = g.tasks();
    if (g.nonzero_count() == 0) throw DegeneracyError("config_dir: all gradients are zero");
    ColMatrix m0(d, m);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec u = g.unit_exact(j);
        std::copy(u.begin(), u.end(), m0.col(j));
    }
    const PinvOnes p = pseudoinverse_rows_times_ones(m0, tol);
    BaselineResult res;
    res.update.assign(d, 0.0);
    if (p.degenerate) {
        res.degenerate = true;
        return res;
    }
    res.degenerate = p.rank < m;
    const Vec dir = normalize(p.value, tol.delta);
    double proj = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        proj += kernels::dot(g.column(j).data(), dir.data(), d);
    res.update = dir;
    kernels::scal(proj, res.update.data(), d);
    return res;
}

BaselineResult aligngrad(const GradientSet& g, const NumericTolerances& tol) {
    const std::size_t d = g.dim(), m = g.tasks();
    if (g.nonzero_count() == 0) throw DegeneracyError("aligngrad: all gradients are zero");
    Vec sum(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec u = g.unit_exact(j);
        kernels::axpy(1.0, u.data(), sum.data(), d);
    }
    BaselineResult res;
    res.update.assign(d, 0.0);
    const double sn = kernels::nrm2(sum.data(), d);
    const double mean_sq = (sn / static_cast<double>(m)) * (sn / static_cast<double>(m));
    res.align_score = 2.0 * mean_sq - 1.0;
    if (sn <= tol.cone_zero_tol * static_cast<double>(m)) {
        res.degenerate = true;
        return res;
    }
    const Vec dir = normalize(sum, tol.delta);
    double proj = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        proj += kernels::dot(g.column(j).data(), dir.data(), d);
    res.update = dir;
    kernels::scal(proj, res.update.data(), d);
    return res;
}

// Away-step Frank-Wolfe over the simplex; the away steps restore linear
// convergence so the 1e-10 duality-gap stop is reachable within the default
// iteration budget.
BaselineResult mgda_minnorm(const GradientSet& g, int max_iter) {
    const std::size_t d = g.dim(), m = g.tasks();
    ColMatrix units(d, m);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec u = g.unit_exact(j);
        std::copy(u.begin(), u.end(), units.col(j));
    }
    Vec lambda(m, 1.0 / static_cast<double>(m));
    Vec point = matvec(units, lambda);

    BaselineResult res;
    for (int it = 0; it < max_iter; ++it) {
        // Gradient of ||U lambda||^2 w.r.t. lambda is 2 U^T point.
        Vec grad(m);
        for (std::size_t j = 0; j < m; ++j)
            grad[j] = 2.0 * kernels::dot(units.col(j), point.data(), d);
        std::size_t fw = 0, away = 0;
        bool away_found = false;
        for (std::size_t j = 1; j < m; ++j)
            if (grad[j] < grad[fw]) fw = j;
        for (std::size_t j = 0; j < m; ++j)
            if (lambda[j] > 0.0 && (!away_found || grad[j] > grad[away])) {
                away = j;
                away_found = true;
            }
        const double grad_dot_lambda = kernels::dot(grad.data(), lambda.data(), m);
        const double gap_fw = grad_dot_lambda - grad[fw];
        if (gap_fw <= 1e-10) break;
        const double gap_away = away_found ? grad[away] - grad_dot_lambda : -1.0;

        Vec dir_l(m, 0.0);
        double step_max;
        if (gap_fw >= gap_away) {
            for (std::size_t j = 0; j < m; ++j) dir_l[j] = -lambda[j];
            dir_l[fw] += 1.0;
            step_max = 1.0;
        } else {
            for (std::size_t j = 0; j < m; ++j) dir_l[j] = lambda[j];
            dir_l[away] -= 1.0;
            step_max = lambda[away] < 1.0 ? lambda[away] / (1.0 - lambda[away]) : 1e18;
        }
        const Vec dir = matvec(units, dir_l);
        const double denom = kernels::nrm2sq(dir.data(), d);
        if (denom == 0.0) break;
        const double t = std::clamp(-kernels::dot(point.data(), dir.data(), d) / denom, 0.0,
                                    step_max);
        if (t == 0.0) break;
        for (std::size_t j = 0; j < m; ++j) lambda[j] = std::max(0.0, lambda[j] + t * dir_l[j]);
        double lsum = 0.0;
        for (double x : lambda) lsum += x;
        for (double& x : lambda) x /= lsum;
        point = matvec(units, lambda);
    }
    res.update = std::move(point);
    res.weights = std::move(lambda);
    return res;
}

BaselineResult linear_scalarization(const GradientSet& g, const Vec& weights) {
    if (weights.size() != g.tasks())
        throw InvalidInputError("linear_scalarization: weight length mismatch");
    for (double w : weights)
        if (w < 0.0) throw InvalidInputError("linear_scalarization: negative weight");
    BaselineResult res;
    res.update = matvec(g.matrix(), weights);
    res.weights = weights;
    return res;
}

BaselineResult run_baseline(BaselineChoice choice, const GradientSet& g,
                            const BaselineOptions& opt) {
    try {
        switch (choice) {
            case BaselineChoice::PCGrad: return pcgrad(g, opt.seed);
            case BaselineChoice::IMTLG: return imtl_g(g, opt.tol);
            case BaselineChoice::ConFIG: return config_dir(g, opt.tol);
            case BaselineChoice::AlignGrad: return aligngrad(g, opt.tol);
            case BaselineChoice::MGDAMinNorm: return mgda_minnorm(g, opt.mgda_max_iter);
            case BaselineChoice::LinearScalarization:
                return linear_scalarization(
                    g, opt.ls_weights.empty() ? Vec(g.tasks(), 1.0) : opt.ls_weights);
        }
        throw InvalidInputError("run_baseline: unknown choice");
    } catch (const DegeneracyError&) {
        BaselineResult res;
        res.update.assign(g.dim(), 0.0);
        res.degenerate = true;
        return res;
    }
}

const char* baseline_name(BaselineChoice c) {
    switch (c) {
        case BaselineChoice::PCGrad: return "pcgrad";
        case BaselineChoice::IMTLG: return "imtlg";
        case BaselineChoice::ConFIG: return "config";
        case BaselineChoice::AlignGrad: return "aligngrad";
        case BaselineChoice::MGDAMinNorm: return "mgda";
        case BaselineChoice::LinearScalarization: return "ls";
    }
    return "unknown";
}

} // namespace hrgrad
