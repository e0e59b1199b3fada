#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "hrgrad/aggregate.hpp"
#include "hrgrad/baselines.hpp"
#include "hrgrad/gradient_set.hpp"
#include "hrgrad/optimizer.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

/// Two-task generator with a pinned angle and norm ratio.
struct ConflictPairSpec {
    double angle = 0.0;           // radians in (0, pi]
    double magnitude_ratio = 1.0; // ||g_2|| / ||g_1||, > 0
    std::size_t dim = 2;
};

/// g_1 random unit, g_2 = ratio * (cos(angle) g_1 + sin(angle) u_perp).
GradientSet make_conflict_pair(const ConflictPairSpec& spec, std::uint64_t seed);

/// n draws of exp(xi), xi uniform on [log(eps_min), 0]; density 1/(eps L)
/// with L = log(1/eps_min) on [eps_min, 1].
Vec sample_eps_loguniform(double eps_min, std::size_t n, std::uint64_t seed);
double loguniform_pdf(double eps, double eps_min);

/// Kolmogorov-Smirnov statistic of samples against U[lo, hi].
double ks_statistic_uniform(Vec samples, double lo, double hi);
/// Asymptotic critical value at significance level 1% for sample size n.
double ks_critical_1pct(std::size_t n);

/// Random gradient set for the property fuzzer: directions uniform on the
/// sphere, norms log-uniform in [1e-6, 1e3], m in {2..6}, D in {4..64}.
GradientSet random_gradient_set(std::mt19937_64& rng);
GradientSet random_gradient_set(std::size_t dim, std::size_t tasks, std::mt19937_64& rng,
                                double min_norm = 1e-6, double max_norm = 1e3);

/// Sum of quadratic bowls 1/2 (theta - c_i)^T A_i (theta - c_i) with
/// per-task stiffness 1/eps_i in one seeded random direction.
struct QuadraticTaskFamily {
    std::size_t dim = 0;
    std::vector<ColMatrix> a;  // per-task PSD matrices
    std::vector<Vec> center;   // per-task optima
    Vec eps;
    double l_global = 0.0;     // spectral norm of sum A_i
    double l_star = 0.0;       // minimum of the aggregate loss
    Vec theta_opt;             // argmin of the aggregate loss

    double task_loss(std::size_t i, const Vec& theta) const;
    Vec task_gradient(std::size_t i, const Vec& theta) const;
    double total_loss(const Vec& theta) const;

    /// Independent random rotations and centers; one direction per task is
    /// stiffened by 1/eps_i.
    static QuadraticTaskFamily make_stiff(std::size_t dim, const Vec& eps, std::uint64_t seed);
    /// Shared eigenbasis and a shared optimum, so task gradients never
    /// conflict anywhere.
    static QuadraticTaskFamily make_conflict_free(std::size_t dim, std::size_t tasks,
                                                  std::uint64_t seed);
};

enum class RunMethod { HRGrad, PCGrad, IMTLG, ConFIG, AlignGrad, MGDA, LS };
std::optional<RunMethod> parse_method(const std::string& name);
const char* method_name(RunMethod m);

struct TrajectoryStep {
    long step = 0;
    double total_loss = 0.0;
    Vec task_losses;
    double grad_sum_norm = 0.0;
    double update_norm = 0.0;
    double s_c = 0.0;
    Vec angles;
    std::size_t conflict_count = 0;
    double alpha_max = 0.0;
    double rho_min = 0.0; // min_i g_i . g_u / ||g_i||; NaN for baselines
    double kappa = 0.0;   // rho_min / s_c; NaN for baselines
    bool degenerate = false;
};

struct RunTrajectory {
    std::vector<TrajectoryStep> steps;
    std::string config_echo;
    double wall_time_sec = 0.0;
    bool aborted = false; // loss blew past 1e12 x initial
    double initial_loss = 0.0;
};

enum class RunMode { Direct, Adam };

/// K steps of theta <- theta - gamma * update (Direct) or of the round-robin
/// optimizer (Adam; one trajectory row per full round). theta_0 is seeded
/// Gaussian. Divergence aborts the run in-band.
RunTrajectory run_convergence(const QuadraticTaskFamily& family, RunMethod method, long steps,
                              double gamma, RunMode mode, std::uint64_t seed,
                              const MerConfig& mer_cfg = {}, const NumericTolerances& tol = {});

struct DescentReport {
    long asserted = 0;   // steps where the inequality was checked
    long violations = 0; // checked steps that failed
    long skipped = 0;    // steps outside the assumptions (rho_min <= 0 or big gamma)
    double worst_slack = 0.0;
    bool pass = true;
};

/// Per-step descent inequality
///   L(k+1) <= L(k) - gamma kappa (1 - L gamma / (2 kappa)) ||update||^2
/// checked wherever rho_min > 0 and gamma <= 2 kappa / L, with slack
/// 1e-8 |L(k)|.
DescentReport verify_convex_descent(const RunTrajectory& traj, const QuadraticTaskFamily& family,
                                    double gamma);

struct ErgodicReport {
    double alpha = 0.0;     // min_k s_c over non-degenerate steps
    double kappa_min = 0.0; // min_k kappa
    double min_grad_sq = 0.0;
    double bound = 0.0;
    bool assertable = false; // kappa_min > 0 so the bound applies
    bool alpha_positive = false;
    bool pass = true;
};

/// Ergodic bound min_k ||sum_i g_i^k||^2 <= 2 [L0 - L*] / (gamma kappa_min
/// alpha^2 K) (1 + 1e-6), asserted only when every step kept kappa > 0.
ErgodicReport verify_nonconvex_bound(const RunTrajectory& traj,
                                     const QuadraticTaskFamily& family, double gamma);

/// sqrt(sum |p_i - r_i|^2 / sum |r_i|^2); the reference must not be all-zero.
double relative_l2_error(const Vec& predicted, const Vec& reference);

/// CSV rows: step,total_loss,grad_sum_norm,update_norm,s_c,conflicts,
/// alpha_max,rho_min,kappa
std::string trajectory_csv(const RunTrajectory& traj);

} // namespace hrgrad
