#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clnas/controller.hpp"
#include "clnas/param_store.hpp"

namespace clnas {

enum class LayerKind { Dense, Conv };

struct HyperLayerSpec {
    LayerKind kind = LayerKind::Dense;
    int capacity = 0; // u_i, immutable
    int k = 0;        // conv kernel size; grows over time, never shrinks
};

/// The fixed search space: per-layer slot capacities plus input/output
/// geometry. Conv layers (if any) come first, then dense layers; the flatten
/// happens at the first dense layer.
struct HyperNetSpec {
    std::vector<HyperLayerSpec> layers;
    int input_dim = 0;      // flat input width (dense-first nets)
    int input_channels = 0; // image input geometry (conv-first nets)
    int input_h = 0;
    int input_w = 0;
    int classes = 0;
    int max_new_per_layer = 0; // <= 0 means uncapped

    int depth() const { return static_cast<int>(layers.size()); }
    int conv_layers() const;
    int total_slots() const;
    std::vector<int> capacities() const;
    SlotLayout slot_layout() const;
    int flat_input() const;
    /// Spatial size entering / leaving conv layer i under the current kernels.
    std::pair<int, int> spatial_in(int layer) const;
    std::pair<int, int> spatial_out(int layer) const;
    void validate() const;
};

/// Global slot id of slot `idx` within `layer`.
int slot_id(const HyperNetSpec& spec, int layer, int idx);

/// Full-capacity weight storage shared by all tasks. Entry masks mean
/// "written by some commit" here, not trainability. Layout:
///   dense layer i            L{i}/W {u_i, prev}          + L{i}/b {u_i}
///   conv layer i             L{i}/K {u_i, prev, k, k}    + L{i}/b {u_i}
///   flatten-boundary dense   L{i}/W {u_i, prev, oh0, ow0} + L{i}/b {u_i}
///   per-task head            head/t{t}/W {classes, n_last} + head/t{t}/b
/// The flatten entry is sized for the spatial output at creation time (the
/// largest it will ever be, since kernels only grow); smaller later spatial
/// sizes read the top-left sub-block.
struct SlotBank {
    ParamStore store;
    std::vector<std::uint8_t> fresh_ring; // per layer: ring cells added by the
                                          // most recent growth, trainable until
                                          // the next commit consumes them
    int oh0 = 0, ow0 = 0;

    static SlotBank create(const HyperNetSpec& spec);
};

std::string bank_weight_name(const HyperNetSpec& spec, int layer);
std::string bank_bias_name(int layer);
std::string head_weight_name(int task);
std::string head_bias_name(int task);

/// Row-major flat offset into a rank-4 entry.
inline Eigen::Index idx4(const std::vector<std::uint32_t>& dims, int a, int b, int c, int d) {
    return ((static_cast<Eigen::Index>(a) * dims[1] + b) * dims[2] + c) * dims[3] + d;
}

/// Grows every filter slice of one conv layer from k to k+1 in place,
/// embedding the old block at the top-left and filling the new ring with
/// neighbor averages. Returns false (and records a warning) if any downstream
/// spatial size would become infeasible. On success marks the layer's ring
/// fresh and updates the spec's kernel size.
bool grow_conv_layer(HyperNetSpec& spec, SlotBank& bank, int layer,
                     std::vector<std::string>* warnings = nullptr);

/// Everything recorded about one committed task, sufficient to rebuild and
/// re-evaluate its network from the bank alone.
struct TaskRecord {
    int task = 0;
    std::vector<std::vector<int>> used;  // per layer, ascending slot indices
    std::vector<std::vector<int>> fresh; // per layer, slots first trained here
    std::vector<int> filter_k;           // per conv layer, kernel used
    long long param_count = 0;
    int new_count = 0;
    int reused_old = 0;
    double valid_acc = 0.0, test_acc = 0.0;
    std::string valid_acc_hex, test_acc_hex; // exact bit patterns for audits
    double seconds = 0.0;
    std::string action_text; // effective action string
    int episode = 0, step = 0;

    nlohmann::json to_json() const;
    static TaskRecord from_json(const nlohmann::json& j);
};

/// First-training task per slot (0 = never trained) plus the per-layer kernel
/// history and the committed task records.
struct Provenance {
    std::vector<int> first_task;
    std::vector<std::vector<int>> filter_history; // [conv layer][task-1] = k
    std::vector<TaskRecord> tasks;

    static Provenance create(const HyperNetSpec& spec);
    bool has_task(int t) const;
    const TaskRecord& record(int t) const;

    nlohmann::json to_json() const;
    static Provenance from_json(const nlohmann::json& j);
};

/// %a round-trip helpers used wherever accuracies must survive audits bit-exactly.
std::string double_to_hex(double v);
double hex_to_double(const std::string& s);

} // namespace clnas
