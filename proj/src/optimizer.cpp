#include "hrgrad/optimizer.hpp"

#include <cmath>

#include <json.hpp>

#include "hrgrad/kernels.hpp"

namespace hrgrad {

HROptimizerState HROptimizerState::init(Vec theta0, std::size_t tasks, AdamHyper hyper,
                                        LrSchedule schedule) {
    if (theta0.empty() || tasks == 0)
        throw InvalidInputError("HROptimizerState: need parameters and at least one task");
    HROptimizerState s;
    s.dim = theta0.size();
    s.tasks = tasks;
    s.theta = std::move(theta0);
    s.task_m.assign(tasks, Vec(s.dim, 0.0));
    s.task_t.assign(tasks, 0);
    s.shared_m.assign(s.dim, 0.0);
    s.shared_v.assign(s.dim, 0.0);
    s.hyper = hyper;
    s.schedule = schedule;
    return s;
}

StepReport hr_step(HROptimizerState& s, std::size_t task_index,
                   std::span<const double> task_gradient, const MerConfig& mer_cfg,
                   const NumericTolerances& tol, const LossHistory* losses) {
    const std::size_t m = s.tasks, d = s.dim;
    if (task_gradient.size() != d) throw InvalidInputError("hr_step: gradient size mismatch");
    for (double x : task_gradient)
        if (!std::isfinite(x)) throw InvalidInputError("hr_step: non-finite gradient");
    const long t = s.global_t + 1;
    const std::size_t expected = static_cast<std::size_t>((t - 1) % static_cast<long>(m));
    if (task_index != expected)
        throw ContractError("hr_step: task index breaks the round-robin order");

    const double b1 = s.hyper.beta1, b2 = s.hyper.beta2;
    s.task_t[task_index] += 1;
    Vec& mi = s.task_m[task_index];
    for (std::size_t k = 0; k < d; ++k) mi[k] = b1 * mi[k] + (1.0 - b1) * task_gradient[k];

    // Bias-corrected moments of the tasks visited so far.
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < m; ++j)
        if (s.task_t[j] > 0) active.push_back(j);
    ColMatrix hat(d, active.size());
    for (std::size_t c = 0; c < active.size(); ++c) {
        const double corr = 1.0 - std::pow(b1, static_cast<double>(s.task_t[active[c]]));
        const Vec& mj = s.task_m[active[c]];
        for (std::size_t k = 0; k < d; ++k) hat(k, c) = mj[k] / corr;
    }

    const AggregationResult agg =
        hrgrad_aggregate(GradientSet(std::move(hat), tol.delta), mer_cfg, tol, losses);
    const Vec& mg = agg.update;

    // Implied raw gradient consistent with the operator output, then the
    // usual shared-moment recursions.
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
    Vec gc(d);
    for (std::size_t k = 0; k < d; ++k)
        gc[k] = (mg[k] * corr1 - b1 * s.shared_m[k]) / (1.0 - b1);
    for (std::size_t k = 0; k < d; ++k) {
        s.shared_m[k] = b1 * s.shared_m[k] + (1.0 - b1) * gc[k];
        s.shared_v[k] = b2 * s.shared_v[k] + (1.0 - b2) * gc[k] * gc[k];
    }
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const double lr = s.schedule.at(t);
    for (std::size_t k = 0; k < d; ++k) {
        const double vhat = s.shared_v[k] / corr2;
        s.theta[k] -= lr * mg[k] / (std::sqrt(vhat) + s.hyper.eps);
    }
    s.global_t = t;

    StepReport rep;
    rep.t = t;
    rep.lr = lr;
    rep.s_c = agg.s_c;
    rep.conflict_count = agg.conflicts.size();
    rep.angles = agg.angles;
    rep.update_norm = kernels::nrm2(mg.data(), d);
    rep.degenerate = agg.degenerate;
    return rep;
}

void hr_reset(HROptimizerState& s) {
    for (auto& v : s.task_m) std::fill(v.begin(), v.end(), 0.0);
    std::fill(s.task_t.begin(), s.task_t.end(), 0);
    std::fill(s.shared_m.begin(), s.shared_m.end(), 0.0);
    std::fill(s.shared_v.begin(), s.shared_v.end(), 0.0);
    s.global_t = 0;
}

std::string HROptimizerState::to_json() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["tasks"] = tasks;
    j["theta"] = theta;
    j["task_m"] = task_m;
    j["task_t"] = task_t;
    j["shared_m"] = shared_m;
    j["shared_v"] = shared_v;
    j["global_t"] = global_t;
    j["hyper"] = {{"beta1", hyper.beta1}, {"beta2", hyper.beta2}, {"eps", hyper.eps}};
    j["schedule"] = {{"eta0", schedule.eta0}, {"decay", schedule.decay},
                     {"period", schedule.period}};
    return j.dump();
}

HROptimizerState HROptimizerState::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(std::string("HROptimizerState: bad JSON: ") + e.what());
    }
    HROptimizerState s;
    try {
        s.dim = j.at("dim").get<std::size_t>();
        s.tasks = j.at("tasks").get<std::size_t>();
        s.theta = j.at("theta").get<Vec>();
        s.task_m = j.at("task_m").get<std::vector<Vec>>();
        s.task_t = j.at("task_t").get<std::vector<long>>();
        s.shared_m = j.at("shared_m").get<Vec>();
        s.shared_v = j.at("shared_v").get<Vec>();
        s.global_t = j.at("global_t").get<long>();
        s.hyper.beta1 = j.at("hyper").at("beta1").get<double>();
        s.hyper.beta2 = j.at("hyper").at("beta2").get<double>();
        s.hyper.eps = j.at("hyper").at("eps").get<double>();
        s.schedule.eta0 = j.at("schedule").at("eta0").get<double>();
        s.schedule.decay = j.at("schedule").at("decay").get<double>();
        s.schedule.period = j.at("schedule").at("period").get<long>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(std::string("HROptimizerState: bad field: ") + e.what());
    }
    if (s.theta.size() != s.dim || s.task_m.size() != s.tasks || s.task_t.size() != s.tasks ||
        s.shared_m.size() != s.dim || s.shared_v.size() != s.dim)
        throw InvalidInputError("HROptimizerState: inconsistent sizes");
    return s;
}

} // namespace hrgrad
