#include "clnas/optimizer.hpp"

#include <cmath>

#include "clnas/errors.hpp"

namespace clnas {

OptimizerState OptimizerState::sgd(double lr) {
    OptimizerState s;
    s.kind = OptKind::SGD;
    s.lr = lr;
    return s;
}

OptimizerState OptimizerState::adam(double lr) {
    OptimizerState s;
    s.kind = OptKind::Adam;
    s.lr = lr;
    return s;
}

OptimizerState OptimizerState::rmsprop(double lr, double decay) {
    OptimizerState s;
    s.kind = OptKind::RMSProp;
    s.lr = lr;
    s.decay = decay;
    return s;
}

void OptimizerState::init(const ParamStore& params) {
    acc1.clear();
    acc2.clear();
    step_count = 0;
    if (kind == OptKind::SGD) return;
    for (const auto& [name, e] : params) {
        if (kind == OptKind::Adam)
            acc1[name] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.size()));
        acc2[name] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.size()));
    }
}

void OptimizerState::step(ParamStore& params, const ParamStore& grads) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto& [name, p] : params) {
        if (!grads.has(name)) throw InvariantError("gradient missing entry " + name);
        const auto& g = grads.at(name);
        if (g.size() != p.size()) throw InvariantError("gradient shape mismatch for " + name);
        switch (kind) {
        case OptKind::SGD:
            for (std::size_t i = 0; i < p.size(); ++i)
                if (p.mask[i]) p.values[static_cast<Eigen::Index>(i)] -= lr * g.values[static_cast<Eigen::Index>(i)];
            break;
        case OptKind::Adam: {
            auto m_it = acc1.find(name);
            auto v_it = acc2.find(name);
            if (m_it == acc1.end() || v_it == acc2.end())
                throw InvariantError("optimizer accumulator missing for " + name);
            auto& m = m_it->second;
            auto& v = v_it->second;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!p.mask[i]) continue;
                const auto ei = static_cast<Eigen::Index>(i);
                const double gi = g.values[ei];
                m[ei] = beta1 * m[ei] + (1.0 - beta1) * gi;
                v[ei] = beta2 * v[ei] + (1.0 - beta2) * gi * gi;
                const double mhat = m[ei] / bc1;
                const double vhat = v[ei] / bc2;
                p.values[ei] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
            break;
        }
        case OptKind::RMSProp: {
            auto v_it = acc2.find(name);
            if (v_it == acc2.end()) throw InvariantError("optimizer accumulator missing for " + name);
            auto& v = v_it->second;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!p.mask[i]) continue;
                const auto ei = static_cast<Eigen::Index>(i);
                const double gi = g.values[ei];
                v[ei] = decay * v[ei] + (1.0 - decay) * gi * gi;
                p.values[ei] -= lr * gi / (std::sqrt(v[ei]) + eps);
            }
            break;
        }
        }
    }
}

} // namespace clnas
