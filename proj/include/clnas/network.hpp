#pragma once

#include <Eigen/Core>
#include <vector>

#include "clnas/layout.hpp"
#include "clnas/param_store.hpp"

namespace clnas {

/// Activations kept by a forward pass, sufficient for one backward pass.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // inputs[i] feeds layer i; back() is logits
    std::vector<Eigen::MatrixXd> preacts; // pre-ReLU values per layer (empty when relu=false)
};

/// x is (features x batch), one column per sample. Returns logits
/// (classes x batch). Deterministic for identical inputs and parameters.
Eigen::MatrixXd forward(const ParamStore& params, const NetLayout& layout,
                        const Eigen::MatrixXd& x, ForwardCache* cache = nullptr);

/// Mean softmax cross-entropy with row-max stabilization.
double mean_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

struct LossGrad {
    double loss = 0.0;
    ParamStore grads; // keyed/shaped like params; zero at frozen coordinates
};

/// batch_index only labels NumericError messages when the loss goes non-finite.
LossGrad loss_and_grad(const ParamStore& params, const NetLayout& layout,
                       const Eigen::MatrixXd& x, const std::vector<int>& labels,
                       int batch_index = -1);

/// Argmax class per column; ties resolve to the lowest class index.
std::vector<int> predict(const ParamStore& params, const NetLayout& layout,
                         const Eigen::MatrixXd& x);

double accuracy(const ParamStore& params, const NetLayout& layout,
                const Eigen::MatrixXd& x, const std::vector<int>& labels);

} // namespace clnas
