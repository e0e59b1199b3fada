#include "hrgrad/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "hrgrad/kernels.hpp"
#include "hrgrad/linalg.hpp"
#include "hrgrad/rng.hpp"

namespace hrgrad {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec random_unit(std::size_t dim, std::mt19937_64& rng) {
    Vec v(dim);
    double n = 0.0;
    do {
        for (double& x : v) x = gaussian(rng);
        n = kernels::nrm2(v.data(), dim);
    } while (n == 0.0);
    kernels::scal(1.0 / n, v.data(), dim);
    return v;
}
} // namespace

GradientSet make_conflict_pair(const ConflictPairSpec& spec, std::uint64_t seed) {
    if (spec.dim < 2) throw InvalidInputError("make_conflict_pair: need dim >= 2");
    if (!(spec.angle > 0.0) || spec.angle > 3.14159265358979323846 + 1e-12)
        throw InvalidInputError("make_conflict_pair: angle must lie in (0, pi]");
    if (!(spec.magnitude_ratio > 0.0))
        throw InvalidInputError("make_conflict_pair: magnitude ratio must be > 0");
    auto rng = make_stream(seed, 17);
    const Vec g1 = random_unit(spec.dim, rng);
    // Random direction orthogonalized against g1, exactly unit.
    Vec perp;
    double pn = 0.0;
    do {
        perp = random_unit(spec.dim, rng);
        const double c = kernels::dot(perp.data(), g1.data(), spec.dim);
        kernels::axpy(-c, g1.data(), perp.data(), spec.dim);
        pn = kernels::nrm2(perp.data(), spec.dim);
    } while (pn < 1e-6);
    kernels::scal(1.0 / pn, perp.data(), spec.dim);

    ColMatrix g(spec.dim, 2);
    std::copy(g1.begin(), g1.end(), g.col(0));
    kernels::combine(spec.magnitude_ratio * std::cos(spec.angle), g1.data(),
                     spec.magnitude_ratio * std::sin(spec.angle), perp.data(), g.col(1),
                     spec.dim);
    return GradientSet(std::move(g));
}

Vec sample_eps_loguniform(double eps_min, std::size_t n, std::uint64_t seed) {
    if (!(eps_min > 0.0) || !(eps_min < 1.0))
        throw InvalidInputError("sample_eps_loguniform: eps_min must lie in (0, 1)");
    auto rng = make_stream(seed, 29);
    const double lo = std::log(eps_min);
    Vec out(n);
    for (double& x : out) x = std::exp(lo * (1.0 - uniform01(rng)));
    return out;
}

double loguniform_pdf(double eps, double eps_min) {
    if (!(eps_min > 0.0) || !(eps_min < 1.0))
        throw InvalidInputError("loguniform_pdf: eps_min must lie in (0, 1)");
    if (eps < eps_min || eps > 1.0) return 0.0;
    return 1.0 / (eps * std::log(1.0 / eps_min));
}

double ks_statistic_uniform(Vec samples, double lo, double hi) {
    if (samples.empty() || !(hi > lo)) throw InvalidInputError("ks_statistic: bad input");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = std::clamp((samples[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double ks_critical_1pct(std::size_t n) {
    // sqrt(-ln(alpha/2)/2) at alpha = 0.01.
    return 1.6276236115189503 / std::sqrt(static_cast<double>(n));
}

GradientSet random_gradient_set(std::size_t dim, std::size_t tasks, std::mt19937_64& rng,
                                double min_norm, double max_norm) {
    ColMatrix g(dim, tasks);
    const double llo = std::log(min_norm), lhi = std::log(max_norm);
    for (std::size_t j = 0; j < tasks; ++j) {
        const Vec u = random_unit(dim, rng);
        const double norm = std::exp(llo + (lhi - llo) * uniform01(rng));
        kernels::combine(norm, u.data(), 0.0, u.data(), g.col(j), dim);
    }
    return GradientSet(std::move(g));
}

GradientSet random_gradient_set(std::mt19937_64& rng) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng() % 5);  // 2..6
    const std::size_t d = 4 + static_cast<std::size_t>(rng() % 61); // 4..64
    return random_gradient_set(d, m, rng);
}

double QuadraticTaskFamily::task_loss(std::size_t i, const Vec& theta) const {
    Vec r(dim);
    kernels::combine(1.0, theta.data(), -1.0, center[i].data(), r.data(), dim);
    const Vec ar = matvec(a[i], r);
    return 0.5 * kernels::dot(r.data(), ar.data(), dim);
}

Vec QuadraticTaskFamily::task_gradient(std::size_t i, const Vec& theta) const {
    Vec r(dim);
    kernels::combine(1.0, theta.data(), -1.0, center[i].data(), r.data(), dim);
    return matvec(a[i], r);
}

double QuadraticTaskFamily::total_loss(const Vec& theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += task_loss(i, theta);
    return s;
}

namespace {

void finish_family(QuadraticTaskFamily& fam, std::uint64_t seed) {
    const std::size_t d = fam.dim, m = fam.a.size();
    ColMatrix total(d, d);
    Vec rhs(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t r = 0; r < d; ++r) total(r, c) += fam.a[i](r, c);
        const Vec ac = matvec(fam.a[i], fam.center[i]);
        kernels::axpy(1.0, ac.data(), rhs.data(), d);
    }
    fam.l_global = spectral_norm_psd(total, splitmix64(seed) | 1);
    fam.theta_opt = lu_solve(total, rhs);
    fam.l_star = fam.total_loss(fam.theta_opt);
}

ColMatrix scaled_basis(const ColMatrix& q, const Vec& diag) {
    const std::size_t d = q.rows();
    ColMatrix a(d, d);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t r = 0; r < d; ++r) a(r, c) += diag[k] * q(r, k) * q(c, k);
    return a;
}

} // namespace

QuadraticTaskFamily QuadraticTaskFamily::make_stiff(std::size_t dim, const Vec& eps,
                                                    std::uint64_t seed) {
    if (dim < 2 || eps.empty()) throw InvalidInputError("make_stiff: need dim >= 2 and tasks");
    for (double e : eps)
        if (!(e > 0.0)) throw InvalidInputError("make_stiff: eps must be positive");
    QuadraticTaskFamily fam;
    fam.dim = dim;
    fam.eps = eps;
    auto rng = make_stream(seed, 41);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const ColMatrix q = random_orthogonal(dim, rng());
        Vec diag(dim, 1.0);
        diag[0] = 1.0 / eps[i];
        fam.a.push_back(scaled_basis(q, diag));
        Vec c(dim);
        for (double& x : c) x = gaussian(rng);
        fam.center.push_back(std::move(c));
    }
    finish_family(fam, seed);
    return fam;
}

QuadraticTaskFamily QuadraticTaskFamily::make_conflict_free(std::size_t dim, std::size_t tasks,
                                                            std::uint64_t seed) {
    if (dim < 2 || tasks < 1) throw InvalidInputError("make_conflict_free: bad sizes");
    QuadraticTaskFamily fam;
    fam.dim = dim;
    fam.eps.assign(tasks, 1.0);
    auto rng = make_stream(seed, 43);
    const ColMatrix q = random_orthogonal(dim, rng());
    Vec shared_center(dim);
    for (double& x : shared_center) x = gaussian(rng);
    for (std::size_t i = 0; i < tasks; ++i) {
        Vec diag(dim);
        // Shared eigenbasis and shared optimum keep all pairwise gradient
        // products nonnegative along any trajectory.
        for (double& x : diag) x = std::exp(std::log(0.1) + uniform01(rng) * std::log(100.0));
        fam.a.push_back(scaled_basis(q, diag));
        fam.center.push_back(shared_center);
    }
    finish_family(fam, seed);
    return fam;
}

std::optional<RunMethod> parse_method(const std::string& name) {
    if (name == "hrgrad") return RunMethod::HRGrad;
    if (name == "pcgrad") return RunMethod::PCGrad;
    if (name == "imtlg") return RunMethod::IMTLG;
    if (name == "config") return RunMethod::ConFIG;
    if (name == "aligngrad") return RunMethod::AlignGrad;
    if (name == "mgda") return RunMethod::MGDA;
    if (name == "ls") return RunMethod::LS;
    return std::nullopt;
}

const char* method_name(RunMethod m) {
    switch (m) {
        case RunMethod::HRGrad: return "hrgrad";
        case RunMethod::PCGrad: return "pcgrad";
        case RunMethod::IMTLG: return "imtlg";
        case RunMethod::ConFIG: return "config";
        case RunMethod::AlignGrad: return "aligngrad";
        case RunMethod::MGDA: return "mgda";
        case RunMethod::LS: return "ls";
    }
    return "unknown";
}

namespace {

struct DirectUpdate {
    Vec update;
    double s_c = kNaN;
    Vec angles;
    std::size_t conflicts = 0;
    double alpha_max = 0.0;
    double rho_min = kNaN;
    double kappa = kNaN;
    bool degenerate = false;
};

std::optional<BaselineChoice> as_baseline(RunMethod method) {
    switch (method) {
        case RunMethod::PCGrad: return BaselineChoice::PCGrad;
        case RunMethod::IMTLG: return BaselineChoice::IMTLG;
        case RunMethod::ConFIG: return BaselineChoice::ConFIG;
        case RunMethod::AlignGrad: return BaselineChoice::AlignGrad;
        case RunMethod::MGDA: return BaselineChoice::MGDAMinNorm;
        case RunMethod::LS: return BaselineChoice::LinearScalarization;
        case RunMethod::HRGrad: return std::nullopt;
    }
    return std::nullopt;
}

DirectUpdate direct_update(const GradientSet& gs, RunMethod method, std::uint64_t step_seed,
                           const MerConfig& mer_cfg, const NumericTolerances& tol) {
    DirectUpdate out;
    const std::size_t d = gs.dim(), m = gs.tasks();
    out.update.assign(d, 0.0);
    if (const auto choice = as_baseline(method)) {
        BaselineOptions opt;
        opt.tol = tol;
        opt.seed = step_seed;
        try {
            const BaselineResult r = run_baseline(*choice, gs, opt);
            out.update = r.update;
            out.degenerate = r.degenerate;
        } catch (const DegeneracyError&) {
            out.degenerate = true; // zero update, keep stepping
        }
        return out;
    }
    const AggregationResult res = hrgrad_aggregate(gs, mer_cfg, tol);
    out.update = res.update;
    out.s_c = res.s_c;
    out.angles = res.angles;
    out.conflicts = res.conflicts.size();
    out.degenerate = res.degenerate;
    for (double a : res.angles) out.alpha_max = std::max(out.alpha_max, a);
    if (!res.degenerate) {
        double rho = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (gs.norm(i) == 0.0) continue;
            rho = std::min(rho, kernels::dot(gs.column(i).data(), res.fair_direction.data(),
                                             d) /
                                    gs.norm(i));
        }
        out.rho_min = rho;
        out.kappa = res.s_c > 0.0 ? rho / res.s_c : kNaN;
    }
    return out;
}

} // namespace

RunTrajectory run_convergence(const QuadraticTaskFamily& family, RunMethod method, long steps,
                              double gamma, RunMode mode, std::uint64_t seed,
                              const MerConfig& mer_cfg, const NumericTolerances& tol) {
    if (!(gamma > 0.0)) throw InvalidInputError("run_convergence: gamma must be > 0");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t d = family.dim, m = family.a.size();
    auto rng = make_stream(seed, 53);
    Vec theta(d);
    for (double& x : theta) x = gaussian(rng);

    RunTrajectory traj;
    traj.initial_loss = family.total_loss(theta);
    {
        std::ostringstream cfg;
        cfg << "method=" << method_name(method) << " steps=" << steps << " gamma=" << gamma
            << " mode=" << (mode == RunMode::Direct ? "direct" : "adam") << " seed=" << seed
            << " dim=" << d << " tasks=" << m;
        traj.config_echo = cfg.str();
    }

    HROptimizerState adam_state;
    if (mode == RunMode::Adam)
        adam_state = HROptimizerState::init(theta, m, AdamHyper{},
                                            LrSchedule{gamma, 1.0, 1});

    for (long k = 0; k < steps; ++k) {
        if (mode == RunMode::Direct) {
            ColMatrix g(d, m);
            TrajectoryStep row;
            row.step = k;
            row.task_losses.resize(m);
            Vec grad_sum(d, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const Vec gi = family.task_gradient(i, theta);
                std::copy(gi.begin(), gi.end(), g.col(i));
                kernels::axpy(1.0, gi.data(), grad_sum.data(), d);
                row.task_losses[i] = family.task_loss(i, theta);
            }
            row.total_loss = family.total_loss(theta);
            row.grad_sum_norm = kernels::nrm2(grad_sum.data(), d);

            const GradientSet gs(std::move(g), tol.delta);
            const DirectUpdate u =
                direct_update(gs, method, splitmix64(seed ^ static_cast<std::uint64_t>(k)),
                              mer_cfg, tol);
            row.update_norm = kernels::nrm2(u.update.data(), d);
            row.s_c = u.s_c;
            row.angles = u.angles;
            row.conflict_count = u.conflicts;
            row.alpha_max = u.alpha_max;
            row.rho_min = u.rho_min;
            row.kappa = u.kappa;
            row.degenerate = u.degenerate;
            traj.steps.push_back(std::move(row));

            kernels::axpy(-gamma, u.update.data(), theta.data(), d);
        } else {
            TrajectoryStep row;
            row.step = k;
            StepReport last;
            for (std::size_t i = 0; i < m; ++i) {
                const Vec gi = family.task_gradient(i, adam_state.theta);
                last = hr_step(adam_state, i, gi, mer_cfg, tol);
            }
            theta = adam_state.theta;
            row.task_losses.resize(m);
            Vec grad_sum(d, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                row.task_losses[i] = family.task_loss(i, theta);
                const Vec gi = family.task_gradient(i, theta);
                kernels::axpy(1.0, gi.data(), grad_sum.data(), d);
            }
            row.total_loss = family.total_loss(theta);
            row.grad_sum_norm = kernels::nrm2(grad_sum.data(), d);
            row.update_norm = last.update_norm;
            row.s_c = last.s_c;
            row.angles = last.angles;
            row.conflict_count = last.conflict_count;
            row.alpha_max = 0.0;
            for (double a : last.angles) row.alpha_max = std::max(row.alpha_max, a);
            row.rho_min = kNaN;
            row.kappa = kNaN;
            row.degenerate = last.degenerate;
            traj.steps.push_back(std::move(row));
        }
        if (family.total_loss(theta) > 1e12 * std::max(traj.initial_loss, 1e-300)) {
            traj.aborted = true;
            break;
        }
    }
    traj.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return traj;
}

DescentReport verify_convex_descent(const RunTrajectory& traj, const QuadraticTaskFamily& family,
                                    double gamma) {
    DescentReport rep;
    const double lips = family.l_global;
    for (std::size_t k = 0; k + 1 < traj.steps.size(); ++k) {
        const TrajectoryStep& cur = traj.steps[k];
        const TrajectoryStep& nxt = traj.steps[k + 1];
        const bool in_scope = !cur.degenerate && std::isfinite(cur.kappa) && cur.rho_min > 0.0 &&
                              gamma <= 2.0 * cur.kappa / lips;
        if (!in_scope) {
            ++rep.skipped;
            continue;
        }
        ++rep.asserted;
        const double drop = gamma * cur.kappa * (1.0 - lips * gamma / (2.0 * cur.kappa)) *
                            cur.update_norm * cur.update_norm;
        const double slack = 1e-8 * std::abs(cur.total_loss);
        const double excess = nxt.total_loss - (cur.total_loss - drop + slack);
        if (excess > 0.0) {
            ++rep.violations;
            rep.worst_slack = std::max(rep.worst_slack, excess);
        }
    }
    rep.pass = rep.violations == 0;
    return rep;
}

ErgodicReport verify_nonconvex_bound(const RunTrajectory& traj,
                                     const QuadraticTaskFamily& family, double gamma) {
    ErgodicReport rep;
    if (traj.steps.empty()) return rep;
    double alpha = std::numeric_limits<double>::infinity();
    double kmin = std::numeric_limits<double>::infinity();
    double min_grad_sq = std::numeric_limits<double>::infinity();
    bool any_degenerate = false;
    for (const TrajectoryStep& s : traj.steps) {
        min_grad_sq = std::min(min_grad_sq, s.grad_sum_norm * s.grad_sum_norm);
        if (s.degenerate) {
            any_degenerate = true;
            continue;
        }
        alpha = std::min(alpha, s.s_c);
        kmin = std::min(kmin, std::isfinite(s.kappa) ? s.kappa : -1.0);
    }
    rep.alpha = std::isfinite(alpha) ? alpha : 0.0;
    rep.kappa_min = std::isfinite(kmin) ? kmin : 0.0;
    rep.min_grad_sq = min_grad_sq;
    rep.alpha_positive = any_degenerate || rep.alpha > 0.0;
    // The telescoped bound needs kappa > 0 throughout and the step size
    // within kappa / L.
    rep.assertable = rep.kappa_min > 0.0 && rep.alpha > 0.0 &&
                     gamma <= rep.kappa_min / family.l_global;
    if (rep.assertable) {
        const double k_count = static_cast<double>(traj.steps.size());
        rep.bound = 2.0 * (traj.steps.front().total_loss - family.l_star) /
                    (gamma * rep.kappa_min * rep.alpha * rep.alpha * k_count) *
                    (1.0 + 1e-6);
        rep.pass = rep.alpha_positive && min_grad_sq <= rep.bound;
    } else {
        rep.pass = rep.alpha_positive;
    }
    return rep;
}

double relative_l2_error(const Vec& predicted, const Vec& reference) {
    if (predicted.size() != reference.size())
        throw InvalidInputError("relative_l2_error: length mismatch");
    const double den = kernels::nrm2sq(reference.data(), reference.size());
    if (den == 0.0) throw InvalidInputError("relative_l2_error: zero reference");
    Vec diff(predicted.size());
    kernels::combine(1.0, predicted.data(), -1.0, reference.data(), diff.data(),
                     predicted.size());
    return std::sqrt(kernels::nrm2sq(diff.data(), diff.size()) / den);
}

std::string trajectory_csv(const RunTrajectory& traj) {
    std::ostringstream os;
    os.precision(17);
    os << "step,total_loss,grad_sum_norm,update_norm,s_c,conflicts,alpha_max,rho_min,kappa\r\n";
    for (const TrajectoryStep& s : traj.steps) {
        os << s.step << ',' << s.total_loss << ',' << s.grad_sum_norm << ',' << s.update_norm
           << ',' << s.s_c << ',' << s.conflict_count << ',' << s.alpha_max << ',' << s.rho_min
           << ',' << s.kappa << "\r\n";
    }
    return os.str();
}

} // namespace hrgrad
