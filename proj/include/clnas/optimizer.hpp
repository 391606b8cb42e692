#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

#include "clnas/param_store.hpp"

namespace clnas {

enum class OptKind { SGD, Adam, RMSProp };

/// Per-parameter-store optimizer state. Accumulators are keyed like the store
/// they were initialized from; frozen coordinates are never read or written,
/// so their accumulator slots stay exactly zero.
struct OptimizerState {
    OptKind kind = OptKind::SGD;
    double lr = 0.01;
    double beta1 = 0.9;   // Adam
    double beta2 = 0.999; // Adam
    double eps = 1e-8;
    double decay = 0.9;   // RMSProp
    long long step_count = 0;

    std::map<std::string, Eigen::VectorXd> acc1; // Adam first moment
    std::map<std::string, Eigen::VectorXd> acc2; // Adam second moment / RMSProp accumulator

    static OptimizerState sgd(double lr);
    static OptimizerState adam(double lr);
    static OptimizerState rmsprop(double lr, double decay = 0.9);

    void init(const ParamStore& params);

    /// In-place update. Mask-false coordinates are left bit-identical.
    /// SGD: p -= lr*g. Adam: bias-corrected moments. RMSProp:
    /// v = d*v + (1-d)*g^2; p -= lr*g/(sqrt(v)+eps).
    void step(ParamStore& params, const ParamStore& grads);
};

} // namespace clnas
