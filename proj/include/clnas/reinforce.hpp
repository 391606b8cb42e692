#pragma once

#include <vector>

#include "clnas/controller.hpp"
#include "clnas/optimizer.hpp"

namespace clnas {

/// Candidates whose training blew up score this, strictly below any valid
/// candidate's accuracy-minus-penalty.
inline constexpr double kFailedReward = -1.0;

/// accuracy - alpha * new_neuron_count, the per-candidate score. The output
/// head is excluded from the count since every candidate pays for it equally.
double reward(double accuracy, int new_neurons, double alpha);

struct RewardRecord {
    double accuracy = 0.0;
    int new_neurons = 0;
    double alpha = 0.0;
    double value() const { return accuracy - alpha * new_neurons; }
};

/// One step of an episode. CLEAS mode fills `state` and `actions`; the
/// autoregressive (standard) mode records the whole rollout instead.
struct EpisodeStep {
    StateString state;
    ActionString actions;
    Rollout rollout;
    double reward = 0.0;
};

struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    StateString terminal; // carried into the next episode unless exploration restarts
    bool standard_mode = false;
};

/// Exponential moving average of episode mean rewards. Seeds itself with the
/// first mean it sees; the update runs after the gradient step, so the first
/// episode's advantages are centered on its own mean.
struct Baseline {
    double beta = 0.9;
    double value = 0.0;
    bool initialized = false;

    double current(double first_mean) {
        if (!initialized) {
            value = first_mean;
            initialized = true;
        }
        return value;
    }
    void observe(double episode_mean) { value = beta * value + (1.0 - beta) * episode_mean; }
};

struct UpdateResult {
    bool applied = false;   // false when a non-finite gradient was skipped
    double mean_reward = 0.0;
    double baseline = 0.0;  // the value the advantages were centered on
};

/// One policy-gradient step over an episode: descends
///   -sum_u (R^u - b) * log pi(a^u | s^u)
/// through the supplied optimizer, then folds the episode mean into the
/// baseline. A non-finite gradient skips the step and reports it.
UpdateResult reinforce_update(Controller& ctrl, const EpisodeTrace& trace, Baseline& baseline,
                              OptimizerState& opt);

} // namespace clnas
