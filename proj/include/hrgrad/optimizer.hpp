#pragma once

#include <cmath>
#include <string>

#include "hrgrad/aggregate.hpp"
#include "hrgrad/types.hpp"

namespace hrgrad {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Exponentially decayed learning rate eta0 * decay^floor(t / period).
struct LrSchedule {
    double eta0 = 1e-3;
    double decay = 0.96;
    long period = 200;

    double at(long t) const { return eta0 * std::pow(decay, static_cast<double>(t / period)); }
};

/// Round-robin multi-task state: one first moment per task, one shared
/// second moment, all driven through the aggregation operator.
struct HROptimizerState {
    std::size_t dim = 0;
    std::size_t tasks = 0;
    Vec theta;
    std::vector<Vec> task_m; // per-task first moments
    std::vector<long> task_t; // per-task update counters
    Vec shared_m;
    Vec shared_v;
    long global_t = 0;
    AdamHyper hyper;
    LrSchedule schedule;

    static HROptimizerState init(Vec theta0, std::size_t tasks, AdamHyper hyper = {},
                                 LrSchedule schedule = {});

    /// Bit-faithful JSON round trip for counters; floats survive exactly.
    std::string to_json() const;
    static HROptimizerState from_json(const std::string& text);
};

struct StepReport {
    long t = 0;
    double lr = 0.0;
    double s_c = 0.0;
    std::size_t conflict_count = 0;
    Vec angles;
    double update_norm = 0.0;
    bool degenerate = false;
};

/// One optimizer step. `task_index` must follow the round-robin order
/// (t - 1) mod m; anything else is a ContractError. Tasks not yet visited
/// are excluded from the aggregation operator. The parameter update moves
/// along the operator output scaled by the Adam denominator.
StepReport hr_step(HROptimizerState& state, std::size_t task_index,
                   std::span<const double> task_gradient, const MerConfig& mer_cfg,
                   const NumericTolerances& tol, const LossHistory* losses = nullptr);

/// Zero all moments and counters; parameters and hyperparameters survive.
void hr_reset(HROptimizerState& state);

} // namespace hrgrad
