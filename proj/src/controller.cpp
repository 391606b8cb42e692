#include "clnas/controller.hpp"

#include <cmath>

#include "clnas/errors.hpp"

namespace clnas {

const char* action_name(ActionMode m, int a) {
    if (m == ActionMode::Binary) {
        static const char* names[] = {"drop", "use"};
        return names[a];
    }
    static const char* names[] = {"only-use", "use-and-extend", "only-drop", "drop-and-extend"};
    return names[a];
}

std::string ActionString::text() const {
    std::string s;
    s.reserve(a.size());
    for (int v : a) s.push_back(static_cast<char>('0' + v));
    return s;
}

SlotLayout SlotLayout::from_capacities(const std::vector<int>& u) {
    SlotLayout out;
    out.layers = static_cast<int>(u.size());
    for (int i = 0; i < out.layers; ++i)
        for (int j = 0; j < u[static_cast<std::size_t>(i)]; ++j) out.layer_of.push_back(i);
    if (out.layer_of.empty()) throw ConfigError("slot layout with zero slots");
    return out;
}

StateString::StateString(ActionMode m, int l, std::vector<int> actions, std::vector<int> layer_idx)
    : mode(m), layers(l), action_bits(std::move(actions)), layer_bits(std::move(layer_idx)) {
    if (action_bits.size() != layer_bits.size())
        throw ConfigError("state string: action/layer length mismatch");
    for (int a : action_bits)
        if (a < 0 || a >= alphabet_size(mode)) throw ConfigError("state string: action bit out of range");
    for (int b : layer_bits)
        if (b < 0 || b >= layers) throw ConfigError("state string: layer bit out of range");
}

Eigen::VectorXd StateString::element(int j) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(width());
    e[action_bits[static_cast<std::size_t>(j)]] = 1.0;
    e[alphabet_size(mode) + layer_bits[static_cast<std::size_t>(j)]] = 1.0;
    return e;
}

Eigen::MatrixXd StateString::as_inputs() const {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(width(), size());
    for (int j = 0; j < size(); ++j) x.col(j) = element(j);
    return x;
}

namespace {

void glorot_fill(ParamEntry& e, int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values[i] = rng.uniform(-limit, limit);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

Controller make_controller(int input_width, int hidden, int alphabet, Rng& rng) {
    Controller c;
    c.input = input_width;
    c.hidden = hidden;
    c.alphabet = alphabet;
    auto& wx = c.params.add("lstm/wx", {static_cast<std::uint32_t>(4 * hidden), static_cast<std::uint32_t>(input_width)});
    auto& wh = c.params.add("lstm/wh", {static_cast<std::uint32_t>(4 * hidden), static_cast<std::uint32_t>(hidden)});
    c.params.add("lstm/b", {static_cast<std::uint32_t>(4 * hidden)});
    auto& wo = c.params.add("out/w", {static_cast<std::uint32_t>(alphabet), static_cast<std::uint32_t>(hidden)});
    c.params.add("out/b", {static_cast<std::uint32_t>(alphabet)});
    glorot_fill(wx, input_width, hidden, rng);
    glorot_fill(wh, hidden, hidden, rng);
    glorot_fill(wo, hidden, alphabet, rng);
    return c;
}

Controller controller_from_store(ParamStore store) {
    Controller c;
    const auto& wx = store.at("lstm/wx");
    const auto& wo = store.at("out/w");
    if (wx.dims.size() != 2 || wo.dims.size() != 2 || wx.dims[0] % 4 != 0)
        throw ParseError("controller checkpoint: unexpected entry shapes");
    c.hidden = static_cast<int>(wx.dims[0] / 4);
    c.input = static_cast<int>(wx.dims[1]);
    c.alphabet = static_cast<int>(wo.dims[0]);
    c.params = std::move(store);
    return c;
}

Eigen::MatrixXd lstm_forward(const Controller& ctrl, const Eigen::MatrixXd& inputs,
                             PolicyCache* cache) {
    const int h = ctrl.hidden;
    const Eigen::Index n = inputs.cols();
    if (inputs.rows() != ctrl.input)
        throw ConfigError("controller input width " + std::to_string(inputs.rows()) + " != " +
                          std::to_string(ctrl.input));
    const auto wx = ctrl.params.at("lstm/wx").matrix();
    const auto wh = ctrl.params.at("lstm/wh").matrix();
    const auto& b = ctrl.params.at("lstm/b").values;
    const auto wo = ctrl.params.at("out/w").matrix();
    const auto& bo = ctrl.params.at("out/b").values;

    PolicyCache local;
    PolicyCache& cc = cache ? *cache : local;
    cc.x = inputs;
    cc.gi.resize(h, n);
    cc.gf.resize(h, n);
    cc.gg.resize(h, n);
    cc.go.resize(h, n);
    cc.c.resize(h, n);
    cc.tanh_c.resize(h, n);
    cc.h.resize(h, n);
    cc.probs.resize(ctrl.alphabet, n);

    Eigen::VectorXd hprev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd cprev = Eigen::VectorXd::Zero(h);
    Eigen::MatrixXd rows(n, ctrl.alphabet);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd z = wx * inputs.col(j) + wh * hprev + b;
        for (int r = 0; r < h; ++r) {
            cc.gi(r, j) = sigmoid(z[r]);
            cc.gf(r, j) = sigmoid(z[h + r]);
            cc.gg(r, j) = std::tanh(z[2 * h + r]);
            cc.go(r, j) = sigmoid(z[3 * h + r]);
        }
        cc.c.col(j) = cc.gf.col(j).cwiseProduct(cprev) + cc.gi.col(j).cwiseProduct(cc.gg.col(j));
        cc.tanh_c.col(j) = cc.c.col(j).array().tanh();
        cc.h.col(j) = cc.go.col(j).cwiseProduct(cc.tanh_c.col(j));

        Eigen::VectorXd logits = wo * cc.h.col(j) + bo;
        const double m = logits.maxCoeff();
        Eigen::VectorXd e = (logits.array() - m).exp();
        cc.probs.col(j) = e / e.sum();
        rows.row(j) = cc.probs.col(j).transpose();

        hprev = cc.h.col(j);
        cprev = cc.c.col(j);
    }
    if (!rows.allFinite()) throw NumericError("non-finite controller activations");
    return rows;
}

void lstm_backward(const Controller& ctrl, const PolicyCache& cache,
                   const std::vector<int>& chosen, double weight, ParamStore& grads) {
    const int h = ctrl.hidden;
    const Eigen::Index n = cache.x.cols();
    if (static_cast<Eigen::Index>(chosen.size()) != n)
        throw ConfigError("chosen action length mismatch");
    const auto wh = ctrl.params.at("lstm/wh").matrix();
    const auto wo = ctrl.params.at("out/w").matrix();

    auto dwx = grads.at("lstm/wx").matrix();
    auto dwh = grads.at("lstm/wh").matrix();
    auto& db = grads.at("lstm/b").values;
    auto dwo = grads.at("out/w").matrix();
    auto& dbo = grads.at("out/b").values;

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        // d/dlogits of weight * (-log p[a]) = weight * (p - onehot(a))
        Eigen::VectorXd dlogits = weight * cache.probs.col(j);
        dlogits[chosen[static_cast<std::size_t>(j)]] -= weight;

        dwo.noalias() += dlogits * cache.h.col(j).transpose();
        dbo += dlogits;

        Eigen::VectorXd dh = wo.transpose() * dlogits + dh_next;
        Eigen::VectorXd dc = dc_next +
            dh.cwiseProduct(cache.go.col(j)).cwiseProduct(
                (1.0 - cache.tanh_c.col(j).array().square()).matrix());
        Eigen::VectorXd do_ = dh.cwiseProduct(cache.tanh_c.col(j));
        Eigen::VectorXd di = dc.cwiseProduct(cache.gg.col(j));
        Eigen::VectorXd dg = dc.cwiseProduct(cache.gi.col(j));
        Eigen::VectorXd cprev = j > 0 ? Eigen::VectorXd(cache.c.col(j - 1)) : Eigen::VectorXd::Zero(h);
        Eigen::VectorXd df = dc.cwiseProduct(cprev);

        Eigen::VectorXd dz(4 * h);
        for (int r = 0; r < h; ++r) {
            dz[r] = di[r] * cache.gi(r, j) * (1.0 - cache.gi(r, j));
            dz[h + r] = df[r] * cache.gf(r, j) * (1.0 - cache.gf(r, j));
            dz[2 * h + r] = dg[r] * (1.0 - cache.gg(r, j) * cache.gg(r, j));
            dz[3 * h + r] = do_[r] * cache.go(r, j) * (1.0 - cache.go(r, j));
        }

        dwx.noalias() += dz * cache.x.col(j).transpose();
        Eigen::VectorXd hprev = j > 0 ? Eigen::VectorXd(cache.h.col(j - 1)) : Eigen::VectorXd::Zero(h);
        dwh.noalias() += dz * hprev.transpose();
        db += dz;

        dh_next = wh.transpose() * dz;
        dc_next = dc.cwiseProduct(cache.gf.col(j));
    }
}

Eigen::MatrixXd policy_forward(const Controller& ctrl, const StateString& s, PolicyCache* cache) {
    return lstm_forward(ctrl, s.as_inputs(), cache);
}

ActionString decode(const Eigen::MatrixXd& rows, ActionMode mode) {
    ActionString out;
    out.mode = mode;
    out.a.resize(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        int best = 0;
        for (Eigen::Index a = 1; a < rows.cols(); ++a)
            if (rows(j, a) > rows(j, best)) best = static_cast<int>(a);
        out.a[static_cast<std::size_t>(j)] = best;
    }
    return out;
}

ActionString sample_rows(const Eigen::MatrixXd& rows, ActionMode mode, Rng& rng) {
    ActionString out;
    out.mode = mode;
    out.a.resize(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = static_cast<int>(rows.cols()) - 1;
        for (Eigen::Index a = 0; a < rows.cols(); ++a) {
            acc += rows(j, a);
            if (u < acc) {
                pick = static_cast<int>(a);
                break;
            }
        }
        out.a[static_cast<std::size_t>(j)] = pick;
    }
    return out;
}

double sequence_log_prob(const Eigen::MatrixXd& rows, const ActionString& actions) {
    if (rows.rows() != actions.size()) throw ConfigError("rows/actions length mismatch");
    double lp = 0.0;
    for (Eigen::Index j = 0; j < rows.rows(); ++j)
        lp += std::log(rows(j, actions.a[static_cast<std::size_t>(j)]));
    return lp;
}

StateString next_state(const ActionString& actions, const SlotLayout& layout) {
    if (actions.size() != layout.slots())
        throw ConfigError("action string length " + std::to_string(actions.size()) +
                          " != slot count " + std::to_string(layout.slots()));
    return StateString(actions.mode, layout.layers, actions.a, layout.layer_of);
}

StateString random_state(ActionMode mode, const SlotLayout& layout, Rng& rng) {
    std::vector<int> bits(static_cast<std::size_t>(layout.slots()));
    for (auto& b : bits) b = rng.uniform_int(alphabet_size(mode));
    return StateString(mode, layout.layers, std::move(bits), layout.layer_of);
}

Rollout standard_rollout(const Controller& ctrl, ActionMode mode, int n, bool sample, Rng* rng) {
    const int h = ctrl.hidden;
    const int alpha = ctrl.alphabet;
    if (ctrl.input != alpha)
        throw ConfigError("standard rollout needs controller input width == alphabet");
    const auto wx = ctrl.params.at("lstm/wx").matrix();
    const auto wh = ctrl.params.at("lstm/wh").matrix();
    const auto& b = ctrl.params.at("lstm/b").values;
    const auto wo = ctrl.params.at("out/w").matrix();
    const auto& bo = ctrl.params.at("out/b").values;

    Rollout out;
    out.actions.mode = mode;
    out.rows.resize(n, alpha);
    auto& cc = out.cache;
    cc.x = Eigen::MatrixXd::Zero(alpha, n);
    cc.gi.resize(h, n);
    cc.gf.resize(h, n);
    cc.gg.resize(h, n);
    cc.go.resize(h, n);
    cc.c.resize(h, n);
    cc.tanh_c.resize(h, n);
    cc.h.resize(h, n);
    cc.probs.resize(alpha, n);

    Eigen::VectorXd hprev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd cprev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(alpha); // start token
    for (int j = 0; j < n; ++j) {
        cc.x.col(j) = x;
        Eigen::VectorXd z = wx * x + wh * hprev + b;
        for (int r = 0; r < h; ++r) {
            cc.gi(r, j) = sigmoid(z[r]);
            cc.gf(r, j) = sigmoid(z[h + r]);
            cc.gg(r, j) = std::tanh(z[2 * h + r]);
            cc.go(r, j) = sigmoid(z[3 * h + r]);
        }
        cc.c.col(j) = cc.gf.col(j).cwiseProduct(cprev) + cc.gi.col(j).cwiseProduct(cc.gg.col(j));
        cc.tanh_c.col(j) = cc.c.col(j).array().tanh();
        cc.h.col(j) = cc.go.col(j).cwiseProduct(cc.tanh_c.col(j));
        Eigen::VectorXd logits = wo * cc.h.col(j) + bo;
        const double m = logits.maxCoeff();
        Eigen::VectorXd e = (logits.array() - m).exp();
        cc.probs.col(j) = e / e.sum();
        out.rows.row(j) = cc.probs.col(j).transpose();

        int act;
        if (sample) {
            if (!rng) throw ConfigError("sampled rollout needs an rng");
            const double u = rng->uniform();
            double acc = 0.0;
            act = alpha - 1;
            for (int a = 0; a < alpha; ++a) {
                acc += cc.probs(a, j);
                if (u < acc) {
                    act = a;
                    break;
                }
            }
        } else {
            act = 0;
            for (int a = 1; a < alpha; ++a)
                if (cc.probs(a, j) > cc.probs(act, j)) act = a;
        }
        out.actions.a.push_back(act);

        x = Eigen::VectorXd::Zero(alpha);
        x[act] = 1.0;
        hprev = cc.h.col(j);
        cprev = cc.c.col(j);
    }
    if (!out.rows.allFinite()) throw NumericError("non-finite controller activations");
    return out;
}

void standard_backward(const Controller& ctrl, const Rollout& rollout, double weight,
                       ParamStore& grads) {
    // The discrete action fed back as the next input carries no gradient, so
    // the ordinary sequence backward applies unchanged.
    lstm_backward(ctrl, rollout.cache, rollout.actions.a, weight, grads);
}

} // namespace clnas
