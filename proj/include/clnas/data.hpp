#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace clnas {

/// Features are columns; labels are class indices in [0, classes).
struct Dataset {
    Eigen::MatrixXd x;
    std::vector<int> labels;
    int classes = 0;

    int size() const { return static_cast<int>(x.cols()); }
};

struct TaskDataset {
    int task = 0;
    Dataset train, valid, test;
    std::string transform; // human-readable descriptor of how it was derived
};

/// Raw material tasks are cut from: a training pool (validation is carved out
/// of it) and a held-out test pool, plus image geometry when applicable.
struct BasePool {
    Eigen::MatrixXd train_x;
    std::vector<int> train_y;
    Eigen::MatrixXd test_x;
    std::vector<int> test_y;
    int rows = 0, cols = 0; // 0 when features are not an image grid
    int classes = 0;
};

struct SplitSizes {
    int train = 0;
    int valid = 0;
    int test = 0;
};

// --- IDX ingestion (gzip-transparent) ---

struct LabeledImages {
    Eigen::MatrixXd x; // pixels scaled to [0,1], one column per image
    std::vector<int> labels;
    int rows = 0, cols = 0;
};

Eigen::MatrixXd load_idx_images(const std::string& path, int* rows = nullptr, int* cols = nullptr);
std::vector<int> load_idx_labels(const std::string& path);
LabeledImages load_idx_pair(const std::string& images_path, const std::string& labels_path);

/// Assembles a pool from the four conventional IDX files in one directory
/// (train-images-idx3-ubyte[.gz] and friends).
BasePool load_idx_pool(const std::string& dir);

// --- Task transforms ---

/// Pixel permutation for one task: task 1 is the identity, later tasks draw a
/// fixed permutation from (master seed, task id).
std::vector<int> permutation_for_task(int task, std::uint64_t master_seed, int dim);

Eigen::MatrixXd apply_permutation(const Eigen::MatrixXd& x, const std::vector<int>& perm);

/// Rotates every image about its center by `degrees`, bilinear interpolation
/// (or nearest-neighbor on request), zero fill outside the source grid.
Eigen::MatrixXd rotate_images(const Eigen::MatrixXd& x, int rows, int cols, double degrees,
                              bool nearest = false);

/// Split only, no feature transform (each task still gets its own sample draw).
TaskDataset plain_task(const BasePool& base, int task, std::uint64_t master_seed,
                       const SplitSizes& sizes);

TaskDataset permute_task(const BasePool& base, int task, std::uint64_t master_seed,
                         const SplitSizes& sizes);

/// Task t of T rotated by (t-1) * 180 / (T-1) degrees; T = 1 means 0 degrees.
TaskDataset rotate_task(const BasePool& base, int task, int total_tasks,
                        std::uint64_t master_seed, const SplitSizes& sizes, bool nearest = false);

/// Splits the class range evenly over tasks; labels remap to [0, C/T).
std::vector<TaskDataset> class_split(const BasePool& base, int total_tasks,
                                     std::uint64_t master_seed, const SplitSizes& sizes);

// --- Synthetic fixtures ---

/// Gaussian blobs with means `separation` apart, unit covariance; for two
/// classes the Bayes accuracy is Phi(separation / 2).
BasePool synth_blobs(int classes, int dim, int train_per_class, int test_per_class,
                     double separation, std::uint64_t seed);

/// 28x28 ten-class glyph corpus (seven-segment style digits with jitter,
/// blur and noise): a fast deterministic stand-in with MNIST's geometry.
BasePool synth_digits(int train_per_class, int test_per_class, std::uint64_t seed);

} // namespace clnas
