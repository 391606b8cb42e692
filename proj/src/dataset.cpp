#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "clnas/data.hpp"
#include "clnas/errors.hpp"
#include "clnas/rng.hpp"

namespace clnas {

namespace {

/// Carves train/valid out of the training pool and test out of the test pool,
/// all selections drawn deterministically from (master seed, task).
TaskDataset split_pool(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                       const Eigen::MatrixXd& test_x, const std::vector<int>& test_y,
                       int classes, int task, std::uint64_t master_seed, const SplitSizes& sizes) {
    const int pool = static_cast<int>(train_x.cols());
    const int tpool = static_cast<int>(test_x.cols());
    if (sizes.train < 1 || sizes.valid < 0 || sizes.test < 1)
        throw ConfigError("split sizes must be positive (validation may be zero)");
    if (sizes.train + sizes.valid > pool)
        throw ConfigError("train+valid (" + std::to_string(sizes.train + sizes.valid) +
                          ") exceeds the training pool (" + std::to_string(pool) + ")");
    if (sizes.test > tpool)
        throw ConfigError("test size exceeds the test pool (" + std::to_string(tpool) + ")");

    auto order = Rng::stream(master_seed, "split", static_cast<std::uint64_t>(task)).permutation(pool);
    auto torder =
        Rng::stream(master_seed, "split-test", static_cast<std::uint64_t>(task)).permutation(tpool);

    TaskDataset out;
    out.task = task;
    auto take = [&](const Eigen::MatrixXd& sx, const std::vector<int>& sy,
                    const std::vector<int>& idx, int from, int count) {
        Dataset d;
        d.classes = classes;
        d.x.resize(sx.rows(), count);
        d.labels.resize(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) {
            d.x.col(j) = sx.col(idx[static_cast<std::size_t>(from + j)]);
            d.labels[static_cast<std::size_t>(j)] = sy[static_cast<std::size_t>(idx[static_cast<std::size_t>(from + j)])];
        }
        return d;
    };
    out.train = take(train_x, train_y, order, 0, sizes.train);
    out.valid = take(train_x, train_y, order, sizes.train, sizes.valid);
    out.test = take(test_x, test_y, torder, 0, sizes.test);

    // Guarantee class coverage in the validation set when its size permits:
    // swap a duplicate-class validation sample for a training sample of each
    // missing class, deterministically.
    if (sizes.valid >= classes) {
        std::vector<int> vcount(static_cast<std::size_t>(classes), 0);
        for (int l : out.valid.labels) ++vcount[static_cast<std::size_t>(l)];
        for (int c = 0; c < classes; ++c) {
            if (vcount[static_cast<std::size_t>(c)] > 0) continue;
            int src = -1;
            for (int j = 0; j < out.train.size(); ++j)
                if (out.train.labels[static_cast<std::size_t>(j)] == c) {
                    src = j;
                    break;
                }
            if (src < 0) continue; // class absent from the pool slice entirely
            for (int j = 0; j < out.valid.size(); ++j) {
                const int l = out.valid.labels[static_cast<std::size_t>(j)];
                if (vcount[static_cast<std::size_t>(l)] > 1) {
                    out.train.x.col(src).swap(out.valid.x.col(j));
                    std::swap(out.train.labels[static_cast<std::size_t>(src)],
                              out.valid.labels[static_cast<std::size_t>(j)]);
                    --vcount[static_cast<std::size_t>(l)];
                    ++vcount[static_cast<std::size_t>(c)];
                    break;
                }
            }
        }
    }
    return out;
}

} // namespace

std::vector<int> permutation_for_task(int task, std::uint64_t master_seed, int dim) {
    if (task < 1) throw ConfigError("task ids start at 1");
    std::vector<int> perm(static_cast<std::size_t>(dim));
    std::iota(perm.begin(), perm.end(), 0);
    if (task == 1) return perm;
    return Rng::stream(master_seed, "permutation", static_cast<std::uint64_t>(task)).permutation(dim);
}

Eigen::MatrixXd apply_permutation(const Eigen::MatrixXd& x, const std::vector<int>& perm) {
    if (static_cast<Eigen::Index>(perm.size()) != x.rows())
        throw ConfigError("permutation length does not match feature count");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = x.row(perm[static_cast<std::size_t>(r)]);
    return out;
}

Eigen::MatrixXd rotate_images(const Eigen::MatrixXd& x, int rows, int cols, double degrees,
                              bool nearest) {
    if (static_cast<Eigen::Index>(rows) * cols != x.rows())
        throw ConfigError("image geometry does not match feature count");
    const double theta = degrees * M_PI / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            // Inverse mapping: where in the source does this output pixel come from?
            const double sy = cy - st * (c - cx) + ct * (r - cy);
            const double sx = cx + ct * (c - cx) + st * (r - cy);
            const Eigen::Index dst = static_cast<Eigen::Index>(r) * cols + c;
            if (nearest) {
                const int ry = static_cast<int>(std::lround(sy));
                const int rx = static_cast<int>(std::lround(sx));
                if (ry < 0 || ry >= rows || rx < 0 || rx >= cols) continue;
                out.row(dst) = x.row(static_cast<Eigen::Index>(ry) * cols + rx);
                continue;
            }
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            const double fy = sy - y0, fx = sx - x0;
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx) {
                    const int yy = y0 + dy, xx = x0 + dx;
                    if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
                    const double wgt = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
                    if (wgt == 0.0) continue;
                    out.row(dst) += wgt * x.row(static_cast<Eigen::Index>(yy) * cols + xx);
                }
        }
    return out;
}

TaskDataset plain_task(const BasePool& base, int task, std::uint64_t master_seed,
                       const SplitSizes& sizes) {
    TaskDataset out = split_pool(base.train_x, base.train_y, base.test_x, base.test_y,
                                 base.classes, task, master_seed, sizes);
    out.transform = "none";
    return out;
}

TaskDataset permute_task(const BasePool& base, int task, std::uint64_t master_seed,
                         const SplitSizes& sizes) {
    const auto perm = permutation_for_task(task, master_seed, static_cast<int>(base.train_x.rows()));
    TaskDataset out = split_pool(apply_permutation(base.train_x, perm), base.train_y,
                                 apply_permutation(base.test_x, perm), base.test_y, base.classes,
                                 task, master_seed, sizes);
    out.transform = "permute(task=" + std::to_string(task) + ")";
    return out;
}

TaskDataset rotate_task(const BasePool& base, int task, int total_tasks,
                        std::uint64_t master_seed, const SplitSizes& sizes, bool nearest) {
    if (task < 1 || task > total_tasks) throw ConfigError("task outside [1, T]");
    const double angle = total_tasks == 1 ? 0.0
                                          : (task - 1) * 180.0 / static_cast<double>(total_tasks - 1);
    Eigen::MatrixXd tr = base.train_x, te = base.test_x;
    if (angle != 0.0) {
        tr = rotate_images(tr, base.rows, base.cols, angle, nearest);
        te = rotate_images(te, base.rows, base.cols, angle, nearest);
    }
    TaskDataset out = split_pool(tr, base.train_y, te, base.test_y, base.classes, task,
                                 master_seed, sizes);
    out.transform = "rotate(angle=" + std::to_string(angle) + ")";
    return out;
}

std::vector<TaskDataset> class_split(const BasePool& base, int total_tasks,
                                     std::uint64_t master_seed, const SplitSizes& sizes) {
    if (total_tasks < 1) throw ConfigError("need at least one task");
    if (base.classes % total_tasks != 0)
        throw ConfigError("class count " + std::to_string(base.classes) +
                          " not divisible by task count " + std::to_string(total_tasks));
    const int per = base.classes / total_tasks;
    std::vector<TaskDataset> out;
    for (int t = 1; t <= total_tasks; ++t) {
        const int lo = (t - 1) * per, hi = t * per;
        auto filter = [&](const Eigen::MatrixXd& sx, const std::vector<int>& sy,
                          Eigen::MatrixXd& fx, std::vector<int>& fy) {
            std::vector<int> keep;
            for (std::size_t i = 0; i < sy.size(); ++i)
                if (sy[i] >= lo && sy[i] < hi) keep.push_back(static_cast<int>(i));
            fx.resize(sx.rows(), static_cast<Eigen::Index>(keep.size()));
            fy.resize(keep.size());
            for (std::size_t i = 0; i < keep.size(); ++i) {
                fx.col(static_cast<Eigen::Index>(i)) = sx.col(keep[i]);
                fy[i] = sy[static_cast<std::size_t>(keep[i])] - lo;
            }
        };
        Eigen::MatrixXd tr, te;
        std::vector<int> try_, tey;
        filter(base.train_x, base.train_y, tr, try_);
        filter(base.test_x, base.test_y, te, tey);
        TaskDataset td = split_pool(tr, try_, te, tey, per, t, master_seed, sizes);
        td.transform = "classes(" + std::to_string(lo) + ".." + std::to_string(hi - 1) + ")";
        out.push_back(std::move(td));
    }
    return out;
}

} // namespace clnas
