#include "clnas/reinforce.hpp"

#include <cmath>

#include "clnas/errors.hpp"

namespace clnas {

double reward(double accuracy, int new_neurons, double alpha) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0))
        throw ConfigError("reward: accuracy outside [0,1]");
    if (new_neurons < 0) throw ConfigError("reward: negative neuron count");
    if (alpha < 0.0) throw ConfigError("reward: negative alpha");
    return accuracy - alpha * new_neurons;
}

UpdateResult reinforce_update(Controller& ctrl, const EpisodeTrace& trace, Baseline& baseline,
                              OptimizerState& opt) {
    if (trace.steps.empty()) throw ConfigError("reinforce_update: empty episode");
    UpdateResult res;
    double mean = 0.0;
    for (const auto& s : trace.steps) mean += s.reward;
    mean /= static_cast<double>(trace.steps.size());
    res.mean_reward = mean;
    res.baseline = baseline.current(mean);

    ParamStore grads = ctrl.params.zeros_like();
    for (const auto& s : trace.steps) {
        const double weight = s.reward - res.baseline;
        if (weight == 0.0) continue;
        if (trace.standard_mode) {
            standard_backward(ctrl, s.rollout, weight, grads);
        } else {
            PolicyCache cache;
            policy_forward(ctrl, s.state, &cache);
            lstm_backward(ctrl, cache, s.actions.a, weight, grads);
        }
    }

    bool finite = true;
    for (const auto& [name, e] : grads)
        if (!e.values.allFinite()) finite = false;
    if (!finite) {
        baseline.observe(mean);
        res.applied = false;
        return res;
    }
    opt.step(ctrl.params, grads);
    baseline.observe(mean);
    res.applied = true;
    return res;
}

} // namespace clnas
