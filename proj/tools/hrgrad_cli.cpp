// Command-line front end: one-shot aggregation over a JSON gradient file,
// seeded benchmark campaigns with CSV/JSON reports, the randomized property
// fuzzer, and the scale sampler diagnostic.
//
// Exit codes: 0 success, 1 assertion failure, 2 input error,
// 3 degeneracy under --strict, 4 divergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hrgrad/aggregate.hpp"
#include "hrgrad/baselines.hpp"
#include "hrgrad/bench.hpp"
#include "hrgrad/kernels.hpp"
#include "hrgrad/rng.hpp"

using nlohmann::json;
using namespace hrgrad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitInput = 2;
constexpr int kExitStrictDegenerate = 3;
constexpr int kExitDiverged = 4;

struct RunConfig {
    std::vector<std::string> methods{"hrgrad"};
    MerConfig mer;
    NumericTolerances tol;
    // family
    std::size_t dim = 16;
    std::size_t tasks = 4;
    Vec eps;                // explicit stiffness values, one per task
    double eps_min = 0.0;   // > 0: sample `tasks` values log-uniformly
    std::string kind = "stiff"; // or "conflict_free"
    // optimizer
    double gamma = 0.0; // direct-mode step; 0 means 0.5 / L of the family
    double eta0 = 1e-3, decay = 0.96;
    long period = 200;
    double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
    long steps = 100;
    std::string mode = "direct";
    std::string out_dir = "out";
    std::uint64_t seed = 1;
};

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InvalidInputError("config: unknown key '" + key + "' in " + where);
    }
}

RunConfig parse_run_config(const json& j) {
    RunConfig c;
    reject_unknown(j, {"method", "methods", "mer", "tolerances", "family", "optimizer", "steps",
                       "mode", "out_dir", "seed"},
                   "top level");
    if (j.contains("method")) c.methods = {j["method"].get<std::string>()};
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    for (const std::string& m : c.methods)
        if (!parse_method(m)) throw InvalidInputError("config: unknown method '" + m + "'");
    if (j.contains("mer")) {
        const json& m = j["mer"];
        reject_unknown(m, {"lambda", "inner_lr", "alpha_min_steps", "alpha_max_steps", "k_std"},
                       "mer");
        if (m.contains("lambda")) c.mer.lambda = m["lambda"].get<double>();
        if (m.contains("inner_lr")) c.mer.inner_lr = m["inner_lr"].get<double>();
        if (m.contains("alpha_min_steps")) c.mer.alpha_min_steps = m["alpha_min_steps"].get<int>();
        if (m.contains("alpha_max_steps")) c.mer.alpha_max_steps = m["alpha_max_steps"].get<int>();
        if (m.contains("k_std")) c.mer.k_std = m["k_std"].get<double>();
        c.mer.validate();
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        reject_unknown(t, {"delta", "cone_zero_tol", "conflict_tol", "svd_cutoff_rel"},
                       "tolerances");
        if (t.contains("delta")) c.tol.delta = t["delta"].get<double>();
        if (t.contains("cone_zero_tol")) c.tol.cone_zero_tol = t["cone_zero_tol"].get<double>();
        if (t.contains("conflict_tol")) c.tol.conflict_tol = t["conflict_tol"].get<double>();
        if (t.contains("svd_cutoff_rel")) c.tol.svd_cutoff_rel = t["svd_cutoff_rel"].get<double>();
        c.tol.validate();
    }
    if (j.contains("family")) {
        const json& f = j["family"];
        reject_unknown(f, {"dim", "tasks", "eps", "eps_min", "kind", "seed"}, "family");
        if (f.contains("dim")) c.dim = f["dim"].get<std::size_t>();
        if (f.contains("tasks")) c.tasks = f["tasks"].get<std::size_t>();
        if (f.contains("eps")) c.eps = f["eps"].get<Vec>();
        if (f.contains("eps_min")) c.eps_min = f["eps_min"].get<double>();
        if (f.contains("kind")) c.kind = f["kind"].get<std::string>();
        if (f.contains("seed")) c.seed = f["seed"].get<std::uint64_t>();
        if (c.kind != "stiff" && c.kind != "conflict_free")
            throw InvalidInputError("config: family.kind must be stiff or conflict_free");
    }
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        reject_unknown(o, {"gamma", "eta0", "decay", "period", "beta1", "beta2", "eps_adam"},
                       "optimizer");
        if (o.contains("gamma")) c.gamma = o["gamma"].get<double>();
        if (o.contains("eta0")) c.eta0 = o["eta0"].get<double>();
        if (o.contains("decay")) c.decay = o["decay"].get<double>();
        if (o.contains("period")) c.period = o["period"].get<long>();
        if (o.contains("beta1")) c.beta1 = o["beta1"].get<double>();
        if (o.contains("beta2")) c.beta2 = o["beta2"].get<double>();
        if (o.contains("eps_adam")) c.eps_adam = o["eps_adam"].get<double>();
    }
    if (j.contains("steps")) c.steps = j["steps"].get<long>();
    if (j.contains("mode")) c.mode = j["mode"].get<std::string>();
    if (c.mode != "direct" && c.mode != "adam")
        throw InvalidInputError("config: mode must be direct or adam");
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (c.steps < 1) throw InvalidInputError("config: steps must be >= 1");
    return c;
}

json dump_run_config(const RunConfig& c) {
    json j;
    j["methods"] = c.methods;
    j["mer"] = {{"lambda", c.mer.lambda},
                {"inner_lr", c.mer.inner_lr},
                {"alpha_min_steps", c.mer.alpha_min_steps},
                {"alpha_max_steps", c.mer.alpha_max_steps},
                {"k_std", c.mer.k_std}};
    j["tolerances"] = {{"delta", c.tol.delta},
                       {"cone_zero_tol", c.tol.cone_zero_tol},
                       {"conflict_tol", c.tol.conflict_tol},
                       {"svd_cutoff_rel", c.tol.svd_cutoff_rel}};
    j["family"] = {{"dim", c.dim}, {"tasks", c.tasks}, {"eps", c.eps},
                   {"eps_min", c.eps_min}, {"kind", c.kind}, {"seed", c.seed}};
    j["optimizer"] = {{"gamma", c.gamma}, {"eta0", c.eta0},   {"decay", c.decay},
                      {"period", c.period}, {"beta1", c.beta1}, {"beta2", c.beta2},
                      {"eps_adam", c.eps_adam}};
    j["steps"] = c.steps;
    j["mode"] = c.mode;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    return j;
}

std::size_t worker_cap() {
    const char* env = std::getenv("HRGRAD_THREADS");
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (env != nullptr) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<std::size_t>(v);
    }
    return n;
}

int cmd_aggregate(const std::string& input_path, const std::string& method, bool strict,
                  const MerConfig& mer, const NumericTolerances& tol, std::uint64_t seed) {
    std::ifstream in(input_path);
    if (!in) {
        std::cerr << "error: cannot read '" << input_path << "'\n";
        return kExitInput;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    GradientSet g = GradientSet::from_json(buf.str(), tol.delta);

    json out;
    bool degenerate = false;
    if (method == "hrgrad") {
        const AggregationResult res = hrgrad_aggregate(g, mer, tol);
        out["update"] = res.update;
        out["s_c"] = res.s_c;
        out["angles"] = res.angles;
        out["conflicts"] = res.conflicts;
        out["degenerate"] = res.degenerate;
        degenerate = res.degenerate;
    } else {
        BaselineChoice choice;
        if (method == "pcgrad") choice = BaselineChoice::PCGrad;
        else if (method == "imtlg") choice = BaselineChoice::IMTLG;
        else if (method == "config") choice = BaselineChoice::ConFIG;
        else if (method == "aligngrad") choice = BaselineChoice::AlignGrad;
        else if (method == "mgda") choice = BaselineChoice::MGDAMinNorm;
        else if (method == "ls") choice = BaselineChoice::LinearScalarization;
        else {
            std::cerr << "error: unknown method '" << method << "'\n";
            return kExitInput;
        }
        BaselineOptions opt;
        opt.tol = tol;
        opt.seed = seed;
        const BaselineResult r = run_baseline(choice, g, opt);
        out["update"] = r.update;
        out["s_c"] = nullptr;
        out["angles"] = json::array();
        out["conflicts"] = json::array();
        out["degenerate"] = r.degenerate;
        degenerate = r.degenerate;
    }
    std::cout << out.dump() << "\n";
    if (strict && degenerate) return kExitStrictDegenerate;
    return kExitOk;
}

struct BenchOutcome {
    std::string method;
    RunTrajectory traj;
    DescentReport descent;
    ErgodicReport ergodic;
    bool verified = false; // reports were computed (hrgrad + direct only)
};

int cmd_bench(const RunConfig& cfg) {
    Vec eps = cfg.eps;
    if (eps.empty()) {
        if (cfg.eps_min > 0.0)
            eps = sample_eps_loguniform(cfg.eps_min, cfg.tasks, cfg.seed);
        else
            eps.assign(cfg.tasks, 1.0);
    }
    const QuadraticTaskFamily family =
        cfg.kind == "stiff" ? QuadraticTaskFamily::make_stiff(cfg.dim, eps, cfg.seed)
                            : QuadraticTaskFamily::make_conflict_free(cfg.dim, cfg.tasks, cfg.seed);
    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : 0.5 / family.l_global;
    const RunMode mode = cfg.mode == "adam" ? RunMode::Adam : RunMode::Direct;

    auto run_one = [&](const std::string& name) {
        BenchOutcome out;
        out.method = name;
        out.traj = run_convergence(family, *parse_method(name), cfg.steps, gamma, mode,
                                   cfg.seed, cfg.mer, cfg.tol);
        if (name == "hrgrad" && mode == RunMode::Direct) {
            out.descent = verify_convex_descent(out.traj, family, gamma);
            out.ergodic = verify_nonconvex_bound(out.traj, family, gamma);
            out.verified = true;
        }
        return out;
    };

    // Fan out across a bounded worker pool; a single collector writes files.
    std::vector<BenchOutcome> outcomes(cfg.methods.size());
    const std::size_t workers = std::min(worker_cap(), cfg.methods.size());
    std::size_t next = 0;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t mine;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= cfg.methods.size()) return;
                    mine = next++;
                }
                outcomes[mine] = run_one(cfg.methods[mine]);
            }
        });
    for (auto& th : pool) th.join();

    std::filesystem::create_directories(cfg.out_dir);
    json summary;
    summary["config"] = dump_run_config(cfg);
    summary["gamma_resolved"] = gamma;
    summary["l_global"] = family.l_global;
    summary["l_star"] = family.l_star;
    bool any_diverged = false, any_failed = false;
    for (const BenchOutcome& o : outcomes) {
        const std::string csv_path = cfg.out_dir + "/" + o.method + ".csv";
        std::ofstream csv(csv_path, std::ios::binary);
        csv << trajectory_csv(o.traj);
        json m;
        m["method"] = o.method;
        m["csv"] = csv_path;
        m["aborted"] = o.traj.aborted;
        m["steps_recorded"] = o.traj.steps.size();
        m["wall_time_sec"] = o.traj.wall_time_sec;
        m["initial_loss"] = o.traj.initial_loss;
        if (!o.traj.steps.empty()) m["final_loss"] = o.traj.steps.back().total_loss;
        if (o.verified) {
            m["convex_descent"] = {{"asserted", o.descent.asserted},
                                   {"violations", o.descent.violations},
                                   {"skipped", o.descent.skipped},
                                   {"pass", o.descent.pass}};
            m["ergodic_bound"] = {{"alpha", o.ergodic.alpha},
                                  {"kappa_min", o.ergodic.kappa_min},
                                  {"min_grad_sq", o.ergodic.min_grad_sq},
                                  {"bound", o.ergodic.bound},
                                  {"assertable", o.ergodic.assertable},
                                  {"alpha_positive", o.ergodic.alpha_positive},
                                  {"pass", o.ergodic.pass}};
            if (!o.descent.pass || !o.ergodic.pass) any_failed = true;
        }
        if (o.traj.aborted) any_diverged = true;
        summary["runs"].push_back(std::move(m));
    }
    std::ofstream js(cfg.out_dir + "/summary.json");
    js << summary.dump(2) << "\n";
    std::cout << "wrote " << cfg.out_dir << "/summary.json (" << outcomes.size() << " runs)\n";
    if (any_diverged) return kExitDiverged;
    if (any_failed) return kExitAssert;
    return kExitOk;
}

int cmd_fuzz(long iterations, std::uint64_t seed, const MerConfig& mer,
             const NumericTolerances& tol) {
    auto rng = make_stream(seed, 2);
    long violations = 0;
    for (long it = 0; it < iterations; ++it) {
        const GradientSet g = random_gradient_set(rng);
        const std::size_t d = g.dim(), m = g.tasks();
        const AggregationResult res = hrgrad_aggregate(g, mer, tol);
        if (res.degenerate) continue;
        const double upd_norm = kernels::nrm2(res.update.data(), d);
        bool bad = false;
        double norm_sum = 0.0, alpha_max = 0.0, conflict_norms = 0.0;
        Vec rot_sum(d, 0.0), g_sum(d, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double rn = kernels::nrm2(res.rotated.col(i), d);
            if (std::abs(rn - g.norm(i)) > 1e-10 * std::max(g.norm(i), 1e-300)) bad = true;
            norm_sum += g.norm(i);
            kernels::axpy(1.0, res.rotated.col(i), rot_sum.data(), d);
            kernels::axpy(1.0, g.column(i).data(), g_sum.data(), d);
            const double dp = kernels::dot(res.rotated.col(i), res.update.data(), d);
            if (!res.rank_deficient) {
                if (dp < -1e-9 * g.norm(i) * upd_norm) bad = true;
                if (g.norm(i) > 0.0 && std::abs(dp / (g.norm(i) * upd_norm) - res.s_c) > 1e-8)
                    bad = true;
            }
            const double compat = kernels::dot(g.column(i).data(), res.rotated.col(i), d);
            if (std::abs(compat - g.norm(i) * g.norm(i) * std::cos(res.angles[i])) >
                1e-10 * std::max(g.norm(i) * g.norm(i), 1e-300))
                bad = true;
        }
        const double agg = kernels::dot(rot_sum.data(), res.update.data(), d);
        if (std::abs(agg - upd_norm * upd_norm) > 1e-8 * upd_norm * upd_norm) bad = true;
        if (!res.rank_deficient &&
            std::abs(upd_norm - res.s_c * norm_sum) > 1e-8 * res.s_c * norm_sum)
            bad = true;
        for (std::size_t i : res.conflicts) {
            alpha_max = std::max(alpha_max, res.angles[i]);
            conflict_norms += g.norm(i);
        }
        Vec diff(d);
        kernels::combine(1.0, rot_sum.data(), -1.0, g_sum.data(), diff.data(), d);
        if (kernels::nrm2(diff.data(), d) >
            2.0 * std::sin(alpha_max / 2.0) * conflict_norms + 1e-9)
            bad = true;
        if (bad) {
            ++violations;
            std::cout << g.to_json() << "\n";
        }
    }
    std::cerr << "fuzz: " << iterations << " iterations, " << violations << " violations\n";
    return violations == 0 ? kExitOk : kExitAssert;
}

int cmd_sample_eps(double eps_min, long n, long bins, std::uint64_t seed) {
    const Vec samples = sample_eps_loguniform(eps_min, static_cast<std::size_t>(n), seed);
    const double llo = std::log(eps_min);
    std::vector<long> hist(static_cast<std::size_t>(bins), 0);
    for (double e : samples) {
        auto b = static_cast<long>(std::log(e) / llo * static_cast<double>(bins));
        b = std::clamp(b, 0L, bins - 1);
        ++hist[static_cast<std::size_t>(b)];
    }
    std::cout << "bin_lo,bin_hi,count\n";
    for (long b = 0; b < bins; ++b) {
        // Bin 0 holds the largest eps values; edges follow the log scale.
        const double hi = std::exp(llo * static_cast<double>(b) / static_cast<double>(bins));
        const double lo = std::exp(llo * static_cast<double>(b + 1) / static_cast<double>(bins));
        std::cout << lo << "," << hi << "," << hist[static_cast<std::size_t>(b)] << "\n";
    }
    Vec logs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i]);
    const double d = ks_statistic_uniform(logs, llo, 0.0);
    std::cout << "ks_statistic=" << d << " critical_1pct=" << ks_critical_1pct(samples.size())
              << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"harmonized rotational gradient toolkit"};
    app.require_subcommand(1);

    std::string method = "hrgrad";
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    bool strict = false;
    bool print_config = false;

    auto* agg = app.add_subcommand("aggregate", "aggregate a JSON gradient set");
    std::string input_path;
    agg->add_option("input", input_path, "gradient set JSON file")->required();
    agg->add_option("--method", method, "hrgrad | pcgrad | imtlg | config | aligngrad | mgda | ls");
    agg->add_flag("--strict", strict, "exit 3 when the result is degenerate");
    agg->add_option("--seed", seed, "seed for seeded methods");
    agg->add_option("--config", config_path, "JSON config supplying mer/tolerances");

    auto* bench = app.add_subcommand("bench", "run a seeded benchmark campaign");
    bench->add_option("--config", config_path, "RunConfig JSON file");
    bench->add_option("--method", method, "override: single method");
    std::vector<std::string> methods_override;
    bench->add_option("--methods", methods_override, "override: method sweep");
    bench->add_option("--seed", seed, "override: root seed");
    bench->add_option("--out-dir", out_dir, "override: output directory");
    long steps_override = 0;
    bench->add_option("--steps", steps_override, "override: step count");
    bench->add_flag("--print-config", print_config, "echo the resolved config");

    auto* fuzz = app.add_subcommand("fuzz", "randomized property suite");
    long iterations = 0;
    fuzz->add_option("--iterations", iterations, "iteration count")->required();
    fuzz->add_option("--seed", seed, "root seed");

    auto* sample = app.add_subcommand("sample-eps", "scale sampler diagnostic");
    double eps_min = 1e-6;
    long n = 10000, bins = 0;
    sample->add_option("--eps-min", eps_min, "lower end of the scale range")->required();
    sample->add_option("--n", n, "sample count");
    sample->add_option("--bins", bins, "histogram bins (default: one per decade)");
    sample->add_option("--seed", seed, "root seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (agg->parsed()) {
            MerConfig mer;
            NumericTolerances tol;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) {
                    std::cerr << "error: cannot read '" << config_path << "'\n";
                    return kExitInput;
                }
                json j = json::parse(in, nullptr, true);
                const RunConfig rc = parse_run_config(j);
                mer = rc.mer;
                tol = rc.tol;
            }
            return cmd_aggregate(input_path, method, strict, mer, tol, seed);
        }
        if (bench->parsed()) {
            json j = json::object();
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) {
                    std::cerr << "error: cannot read '" << config_path << "'\n";
                    return kExitInput;
                }
                j = json::parse(in, nullptr, true);
            }
            RunConfig cfg = parse_run_config(j);
            if (bench->count("--method") > 0) cfg.methods = {method};
            if (!methods_override.empty()) cfg.methods = methods_override;
            for (const std::string& m : cfg.methods)
                if (!parse_method(m))
                    throw InvalidInputError("config: unknown method '" + m + "'");
            if (bench->count("--seed") > 0) cfg.seed = seed;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (steps_override > 0) cfg.steps = steps_override;
            if (print_config) std::cout << dump_run_config(cfg).dump(2) << "\n";
            return cmd_bench(cfg);
        }
        if (fuzz->parsed()) {
            if (iterations < 1) {
                std::cerr << "error: --iterations must be >= 1\n";
                return kExitInput;
            }
            return cmd_fuzz(iterations, seed, {}, {});
        }
        if (sample->parsed()) {
            if (n < 1) {
                std::cerr << "error: --n must be >= 1\n";
                return kExitInput;
            }
            if (sample->count("--bins") > 0 && bins < 1) {
                std::cerr << "error: --bins must be >= 1\n";
                return kExitInput;
            }
            if (bins < 1)
                bins = std::max(1L, static_cast<long>(std::ceil(-std::log10(eps_min))));
            return cmd_sample_eps(eps_min, n, bins, seed);
        }
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad JSON: " << e.what() << "\n";
        return kExitInput;
    } catch (const DegeneracyError& e) {
        std::cerr << "error: degenerate input: " << e.what() << "\n";
        return strict ? kExitStrictDegenerate : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
