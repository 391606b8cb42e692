#pragma once

#include <vector>

#include "clnas/hypernet.hpp"
#include "clnas/network.hpp"
#include "clnas/rng.hpp"

namespace clnas {

/// One concrete candidate network cut out of the hyper-network: the compact
/// layout over used slots only, with per-coordinate trainability separating
/// reused (frozen) weights from newly added (trainable) ones, plus its own
/// output head.
struct TaskArchitecture {
    int task = 0;
    ActionString actions;                          // effective string after caps/forcing
    std::vector<std::vector<int>> used;            // per layer, ascending slot indices
    std::vector<std::vector<std::uint8_t>> is_new; // parallel to used
    std::vector<int> filter_k;                     // kernel per conv layer
    NetLayout layout;                              // hidden layers + output head
    ParamStore params;
    int new_count = 0;   // hidden slots first trained by this task
    int reused_old = 0;  // hidden slots reused from earlier tasks
    bool trained = false;
    bool failed = false;    // training hit non-finite loss
    bool committed = false;
    double valid_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> loss_curve; // mean loss per epoch
};

/// Applies the per-layer new-slot cap (keep lowest indices, demote the rest to
/// the drop action with the same vote bit) and the non-empty-layer rule (an
/// all-drop layer gets slot 0 switched to use, vote bit preserved).
ActionString effective_actions(const HyperNetSpec& spec, const Provenance& prov,
                               const ActionString& decoded);

/// Builds a candidate for task t >= 2. Weights between two reused slots load
/// frozen from the bank; anything touching a first-use slot initializes fresh
/// and trainable; ring cells of freshly grown kernels load their averaged
/// bank values and train. All fresh draws come from `rng` in a fixed order,
/// so one (seed, action string) pair always yields the same candidate.
TaskArchitecture build(const HyperNetSpec& spec, const SlotBank& bank, const Provenance& prov,
                       const ActionString& decoded, int t, Rng& rng);

/// Task 1: no search; the given starting widths occupy the lowest slot
/// indices and every weight trains.
TaskArchitecture build_initial(const HyperNetSpec& spec, const std::vector<int>& widths,
                               ActionMode mode, Rng& rng);

/// Reassembles a committed task's exact network from the bank: its recorded
/// slots, its recorded kernel sizes (top-left sub-blocks of grown kernels),
/// and its stored head. No randomness; used for audits and forgetting checks.
TaskArchitecture rebuild_for_eval(const HyperNetSpec& spec, const SlotBank& bank,
                                  const TaskRecord& record);

/// Minibatch training of the trainable coordinates only (Adam). The epoch
/// shuffle comes from `rng`. Non-finite loss marks the candidate failed and
/// aborts; frozen coordinates are bit-identical before and after.
void train_new(TaskArchitecture& arch, const Eigen::MatrixXd& x, const std::vector<int>& labels,
               int epochs, int batch_size, double lr, Rng& rng);

double evaluate(const TaskArchitecture& arch, const Eigen::MatrixXd& x,
                const std::vector<int>& labels);

/// Weights + biases of the compact network, output head included.
long long param_count(const TaskArchitecture& arch);

/// Merges the candidate's trainable values into the bank, assigns first-task
/// provenance to its fresh slots, stores its head, appends its TaskRecord and
/// consumes any fresh kernel rings. Committing the same task twice is an error.
void commit(TaskArchitecture& arch, const HyperNetSpec& spec, SlotBank& bank, Provenance& prov);

} // namespace clnas
