#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "clnas/config.hpp"
#include "clnas/hypernet.hpp"
#include "clnas/reinforce.hpp"
#include "clnas/task_arch.hpp"

namespace clnas {

/// One row of the per-candidate search log (iterations.csv).
struct StepLog {
    int task = 0;
    int episode = 0; // h, 1-based
    int step = 0;    // u, 1-based
    double accuracy = 0.0; // validation accuracy; -1 when training diverged
    int new_neurons = 0;
    double reward = 0.0;
    double baseline = 0.0; // value the episode's advantages were centered on
};

struct RunResult {
    ExperimentConfig cfg;
    HyperNetSpec spec; // kernel sizes as of the end of the run
    SlotBank bank;
    Provenance prov;
    Controller ctrl;
    std::vector<StepLog> iterations;
    /// Per task t >= 2 (index t-2): 1 where the episode restarted from a
    /// random state, in episode order.
    std::vector<std::vector<int>> explore_flags;
    std::vector<std::string> warnings;
    int skipped_updates = 0; // policy steps dropped for non-finite gradients
    double total_seconds = 0.0;
};

/// Runs the whole task sequence; writes the run directory when cfg.out is
/// non-empty (the candidate log streams to disk as it is produced, so an
/// aborted run still leaves its config snapshot and partial log behind).
RunResult run_sequence(const ExperimentConfig& cfg);

/// Prints the stored summary and per-layer allocation tables for a finished
/// run directory. Returns a process exit code.
int write_report(const std::string& dir, std::ostream& os);

struct AuditResult {
    bool ok = false;
    std::vector<std::string> violations;
};

/// Integrity check of a run directory: artifact checksums, record/bank
/// coherence, and a bit-exact re-evaluation of every committed task.
AuditResult audit_run(const std::string& dir, std::ostream& os);

/// FNV-1a 64 of a whole file, as a fixed-width hex string.
std::string file_checksum(const std::string& path);

// Artifact file names within a run directory.
inline constexpr const char* kSnapshotFile = "config.snapshot.cfg";
inline constexpr const char* kIterationsFile = "iterations.csv";
inline constexpr const char* kSummaryCsvFile = "summary.csv";
inline constexpr const char* kSummaryJsonFile = "summary.json";
inline constexpr const char* kProvenanceFile = "provenance.json";
inline constexpr const char* kBankFile = "bank.params";
inline constexpr const char* kChecksumFile = "checksums.json";

std::string arch_file_name(int task);

} // namespace clnas
