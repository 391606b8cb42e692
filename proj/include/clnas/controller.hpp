#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "clnas/param_store.hpp"
#include "clnas/rng.hpp"

namespace clnas {

/// Binary: {drop, use}. FourWay adds the per-neuron filter-growth vote:
/// {only-use, use-and-extend, only-drop, drop-and-extend}, in that order.
enum class ActionMode { Binary, FourWay };

inline int alphabet_size(ActionMode m) { return m == ActionMode::Binary ? 2 : 4; }

inline bool action_uses(ActionMode m, int a) {
    return m == ActionMode::Binary ? a == 1 : (a == 0 || a == 1);
}

inline bool action_extends(ActionMode m, int a) {
    return m == ActionMode::FourWay && (a == 1 || a == 3);
}

const char* action_name(ActionMode m, int a);

/// One decision per hyper-network slot.
struct ActionString {
    ActionMode mode = ActionMode::Binary;
    std::vector<int> a;

    int size() const { return static_cast<int>(a.size()); }
    std::string text() const; // compact form for cache keys and logs
};

/// Which layer each slot lives in; fixed for the lifetime of a task.
struct SlotLayout {
    std::vector<int> layer_of;
    int layers = 0;

    int slots() const { return static_cast<int>(layer_of.size()); }
    static SlotLayout from_capacities(const std::vector<int>& u);
};

/// Per slot j the element is one-hot(previous action) concatenated with
/// one-hot(layer of j); element width = |alphabet| + layer count. Stored
/// compactly as the two hot indices; element() expands on demand.
struct StateString {
    ActionMode mode = ActionMode::Binary;
    int layers = 0;
    std::vector<int> action_bits;
    std::vector<int> layer_bits;

    StateString() = default;
    StateString(ActionMode mode, int layers, std::vector<int> actions, std::vector<int> layer_idx);

    int size() const { return static_cast<int>(action_bits.size()); }
    int width() const { return alphabet_size(mode) + layers; }
    Eigen::VectorXd element(int j) const;
    Eigen::MatrixXd as_inputs() const; // width x n, one column per slot
    bool operator==(const StateString&) const = default;
};

/// LSTM policy parameters, held in a ParamStore so checkpoints reuse the
/// flat binary container and the optimizer path.
/// Entries: lstm/wx {4h, in}, lstm/wh {4h, h}, lstm/b {4h},
///          out/w {alphabet, h}, out/b {alphabet}.
struct Controller {
    int input = 0;
    int hidden = 0;
    int alphabet = 0;
    ParamStore params;
};

Controller make_controller(int input_width, int hidden, int alphabet, Rng& rng);
Controller controller_from_store(ParamStore store);

/// Intermediate values of one sequence pass, enough for one backward pass.
struct PolicyCache {
    Eigen::MatrixXd x;      // input x n
    Eigen::MatrixXd gi, gf, gg, go;
    Eigen::MatrixXd c, tanh_c, h;
    Eigen::MatrixXd probs;  // alphabet x n
};

/// Core sequence pass over explicit inputs (one column per step).
/// Returns probability rows (n x alphabet), each row summing to 1.
Eigen::MatrixXd lstm_forward(const Controller& ctrl, const Eigen::MatrixXd& inputs,
                             PolicyCache* cache = nullptr);

/// Accumulates into grads the gradient of  weight * (-sum_j log p_j[chosen_j]).
void lstm_backward(const Controller& ctrl, const PolicyCache& cache,
                   const std::vector<int>& chosen, double weight, ParamStore& grads);

/// Policy over a full state string (the search-time recursion a_j = f(s_j, h_{j-1})).
Eigen::MatrixXd policy_forward(const Controller& ctrl, const StateString& s,
                               PolicyCache* cache = nullptr);

/// Per-position argmax; ties resolve to the lowest alphabet index.
ActionString decode(const Eigen::MatrixXd& rows, ActionMode mode);

ActionString sample_rows(const Eigen::MatrixXd& rows, ActionMode mode, Rng& rng);

double sequence_log_prob(const Eigen::MatrixXd& rows, const ActionString& actions);

/// State for the next step: element j = one-hot(actions[j]) + layer encoding.
StateString next_state(const ActionString& actions, const SlotLayout& layout);

/// Uniformly random action bits; layer bits fixed by the layout.
StateString random_state(ActionMode mode, const SlotLayout& layout, Rng& rng);

/// Autoregressive rollout used by the standard-controller mode: the input of
/// step j is the one-hot of the action emitted at step j-1 (step 1 reads an
/// all-zero start token). Input width is the alphabet size alone.
struct Rollout {
    ActionString actions;
    Eigen::MatrixXd rows; // n x alphabet
    PolicyCache cache;
};

Rollout standard_rollout(const Controller& ctrl, ActionMode mode, int n, bool sample, Rng* rng);

/// Backward for a recorded rollout (inputs replayed from its action string).
void standard_backward(const Controller& ctrl, const Rollout& rollout, double weight,
                       ParamStore& grads);

} // namespace clnas
