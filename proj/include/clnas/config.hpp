#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clnas/data.hpp"
#include "clnas/hypernet.hpp"

namespace clnas {

/// Flat key=value experiment description. Every knob has a default; unknown
/// keys are rejected so typos fail loudly. The canonical snapshot() text
/// round-trips to an identical run.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    int tasks = 3;
    std::string mode = "cleas"; // cleas | cleas-c | reuse-all | standard-controller

    std::string dataset = "synth-digits"; // synth-digits | mnist | blobs
    std::string data_dir;                 // IDX directory for dataset=mnist
    std::string transform = "permute";    // permute | rotate | class-split | none
    int train_per_task = 5000;
    int valid_per_task = 1000;
    int test_per_task = 1000;
    int blob_dim = 16;
    int blob_classes = 4;
    double blob_separation = 4.0;

    std::string layers = "dense:400,dense:200"; // kind:capacity[:kernel], comma-separated
    std::string initial_widths = "312,128";
    int max_new_per_layer = 64;

    int episodes = 200;     // H
    int steps = 1;          // U
    double explore_p = 0.3; // p
    double alpha = 1e-3;
    bool sample_actions = false;
    int controller_hidden = 64;
    double controller_lr = 1e-3; // RMSProp
    double baseline_beta = 0.9;

    int epochs = 5; // per candidate
    int batch = 32;
    double lr = 1e-3; // Adam, task network

    std::string out; // run directory; empty = no artifacts

    void set(const std::string& key, const std::string& value);
    void validate() const;
    std::string snapshot() const;

    static ExperimentConfig parse_file(const std::string& path,
                                       const std::vector<std::string>& overrides = {});
    static ExperimentConfig parse_text(const std::string& text,
                                       const std::vector<std::string>& overrides = {});
};

/// Hyper-network described by the config's layers/dataset keys (kernels at
/// their starting sizes).
HyperNetSpec spec_from_config(const ExperimentConfig& cfg);

std::vector<int> initial_widths_from_config(const ExperimentConfig& cfg);

/// Materializes every task up front, deterministically from the seed.
std::vector<TaskDataset> datasets_from_config(const ExperimentConfig& cfg);

} // namespace clnas
