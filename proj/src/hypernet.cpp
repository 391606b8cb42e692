#include "clnas/hypernet.hpp"

#include <cinttypes>
#include <cstdio>

#include "clnas/errors.hpp"
#include "clnas/filter_growth.hpp"

namespace clnas {

int HyperNetSpec::conv_layers() const {
    int n = 0;
    while (n < depth() && layers[static_cast<std::size_t>(n)].kind == LayerKind::Conv) ++n;
    return n;
}

int HyperNetSpec::total_slots() const {
    int n = 0;
    for (const auto& l : layers) n += l.capacity;
    return n;
}

std::vector<int> HyperNetSpec::capacities() const {
    std::vector<int> u;
    for (const auto& l : layers) u.push_back(l.capacity);
    return u;
}

SlotLayout HyperNetSpec::slot_layout() const { return SlotLayout::from_capacities(capacities()); }

int HyperNetSpec::flat_input() const {
    return conv_layers() > 0 ? input_channels * input_h * input_w : input_dim;
}

std::pair<int, int> HyperNetSpec::spatial_in(int layer) const {
    if (layer < 0 || layer >= conv_layers()) throw InvariantError("spatial_in: not a conv layer");
    int h = input_h, w = input_w;
    for (int i = 0; i < layer; ++i) {
        h -= layers[static_cast<std::size_t>(i)].k - 1;
        w -= layers[static_cast<std::size_t>(i)].k - 1;
    }
    return {h, w};
}

std::pair<int, int> HyperNetSpec::spatial_out(int layer) const {
    auto [h, w] = spatial_in(layer);
    const int k = layers[static_cast<std::size_t>(layer)].k;
    return {h - k + 1, w - k + 1};
}

void HyperNetSpec::validate() const {
    if (layers.empty()) throw ConfigError("hyper-network needs at least one layer");
    if (classes < 2) throw ConfigError("hyper-network needs at least two classes");
    bool seen_dense = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.capacity < 1)
            throw ConfigError("layer " + std::to_string(i) + ": capacity must be positive");
        if (l.kind == LayerKind::Dense) {
            seen_dense = true;
        } else {
            if (seen_dense)
                throw ConfigError("layer " + std::to_string(i) + ": conv layers must precede dense layers");
            if (l.k < 1) throw ConfigError("layer " + std::to_string(i) + ": kernel must be >= 1");
        }
    }
    const int convs = conv_layers();
    if (convs > 0) {
        if (input_channels < 1 || input_h < 1 || input_w < 1)
            throw ConfigError("conv hyper-network needs image input geometry");
        for (int i = 0; i < convs; ++i) {
            auto [h, w] = spatial_in(i);
            const int k = layers[static_cast<std::size_t>(i)].k;
            if (k > h || k > w)
                throw ConfigError("layer " + std::to_string(i) + ": kernel " + std::to_string(k) +
                                  " exceeds input " + std::to_string(h) + "x" + std::to_string(w));
        }
        auto [oh, ow] = spatial_out(convs - 1);
        if (oh < 1 || ow < 1) throw ConfigError("conv stack consumes the whole image");
        if (convs == depth()) throw ConfigError("conv stack needs at least one dense layer after it");
    } else if (input_dim < 1) {
        throw ConfigError("dense hyper-network needs a positive input dimension");
    }
}

int slot_id(const HyperNetSpec& spec, int layer, int idx) {
    int base = 0;
    for (int i = 0; i < layer; ++i) base += spec.layers[static_cast<std::size_t>(i)].capacity;
    return base + idx;
}

std::string bank_weight_name(const HyperNetSpec& spec, int layer) {
    const bool conv = spec.layers[static_cast<std::size_t>(layer)].kind == LayerKind::Conv;
    return "L" + std::to_string(layer) + (conv ? "/K" : "/W");
}

std::string bank_bias_name(int layer) { return "L" + std::to_string(layer) + "/b"; }

std::string head_weight_name(int task) { return "head/t" + std::to_string(task) + "/W"; }

std::string head_bias_name(int task) { return "head/t" + std::to_string(task) + "/b"; }

SlotBank SlotBank::create(const HyperNetSpec& spec) {
    spec.validate();
    SlotBank bank;
    bank.fresh_ring.assign(static_cast<std::size_t>(spec.depth()), 0);
    const int convs = spec.conv_layers();
    if (convs > 0) {
        auto [oh, ow] = spec.spatial_out(convs - 1);
        bank.oh0 = oh;
        bank.ow0 = ow;
    }
    for (int i = 0; i < spec.depth(); ++i) {
        const auto& l = spec.layers[static_cast<std::size_t>(i)];
        const auto u = static_cast<std::uint32_t>(l.capacity);
        std::vector<std::uint32_t> wdims;
        if (l.kind == LayerKind::Conv) {
            const int prev = i == 0 ? spec.input_channels
                                    : spec.layers[static_cast<std::size_t>(i - 1)].capacity;
            wdims = {u, static_cast<std::uint32_t>(prev), static_cast<std::uint32_t>(l.k),
                     static_cast<std::uint32_t>(l.k)};
        } else if (i == convs && convs > 0) {
            const int prev = spec.layers[static_cast<std::size_t>(i - 1)].capacity;
            wdims = {u, static_cast<std::uint32_t>(prev), static_cast<std::uint32_t>(bank.oh0),
                     static_cast<std::uint32_t>(bank.ow0)};
        } else {
            const int prev = i == 0 ? spec.input_dim
                                    : spec.layers[static_cast<std::size_t>(i - 1)].capacity;
            wdims = {u, static_cast<std::uint32_t>(prev)};
        }
        auto& w = bank.store.add(bank_weight_name(spec, i), wdims);
        std::fill(w.mask.begin(), w.mask.end(), 0);
        auto& b = bank.store.add(bank_bias_name(i), {u});
        std::fill(b.mask.begin(), b.mask.end(), 0);
    }
    return bank;
}

bool grow_conv_layer(HyperNetSpec& spec, SlotBank& bank, int layer,
                     std::vector<std::string>* warnings) {
    if (layer < 0 || layer >= spec.conv_layers()) throw InvariantError("grow: not a conv layer");
    const int k = spec.layers[static_cast<std::size_t>(layer)].k;

    // The grown layer and every layer downstream must still fit.
    HyperNetSpec trial = spec;
    trial.layers[static_cast<std::size_t>(layer)].k = k + 1;
    bool fits = true;
    std::string why;
    for (int i = layer; i < trial.conv_layers() && fits; ++i) {
        auto [h, w] = trial.spatial_in(i);
        const int ki = trial.layers[static_cast<std::size_t>(i)].k;
        if (ki > h || ki > w) {
            fits = false;
            why = "kernel " + std::to_string(ki) + " would exceed layer " + std::to_string(i) +
                  " input " + std::to_string(h) + "x" + std::to_string(w);
        }
    }
    if (fits) {
        auto [oh, ow] = trial.spatial_out(trial.conv_layers() - 1);
        if (oh < 1 || ow < 1) {
            fits = false;
            why = "flatten output would vanish";
        }
    }
    if (!fits) {
        if (warnings)
            warnings->push_back("layer " + std::to_string(layer) + ": growth to " +
                                std::to_string(k + 1) + " skipped: " + why);
        return false;
    }

    const auto& old_entry = bank.store.at(bank_weight_name(spec, layer));
    const auto F = static_cast<int>(old_entry.dims[0]);
    const auto C = static_cast<int>(old_entry.dims[1]);
    ParamEntry grown;
    grown.dims = {static_cast<std::uint32_t>(F), static_cast<std::uint32_t>(C),
                  static_cast<std::uint32_t>(k + 1), static_cast<std::uint32_t>(k + 1)};
    grown.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(F) * C * (k + 1) * (k + 1));
    grown.mask.assign(static_cast<std::size_t>(grown.values.size()), 0);
    for (int f = 0; f < F; ++f)
        for (int c = 0; c < C; ++c) {
            Eigen::MatrixXd slice(k, k);
            for (int y = 0; y < k; ++y)
                for (int x = 0; x < k; ++x)
                    slice(y, x) = old_entry.values[idx4(old_entry.dims, f, c, y, x)];
            Eigen::MatrixXd big = extend_filter(slice);
            for (int y = 0; y <= k; ++y)
                for (int x = 0; x <= k; ++x) {
                    const Eigen::Index at = idx4(grown.dims, f, c, y, x);
                    grown.values[at] = big(y, x);
                    if (y < k && x < k)
                        grown.mask[static_cast<std::size_t>(at)] =
                            old_entry.mask[static_cast<std::size_t>(idx4(old_entry.dims, f, c, y, x))];
                }
        }
    const std::string name = bank_weight_name(spec, layer);
    bank.store.remove(name);
    auto& fresh = bank.store.add(name, grown.dims);
    fresh.values = std::move(grown.values);
    fresh.mask = std::move(grown.mask);
    bank.fresh_ring[static_cast<std::size_t>(layer)] = 1;
    spec.layers[static_cast<std::size_t>(layer)].k = k + 1;
    return true;
}

nlohmann::json TaskRecord::to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["used"] = used;
    j["fresh"] = fresh;
    j["filter_k"] = filter_k;
    j["param_count"] = param_count;
    j["new_count"] = new_count;
    j["reused_old"] = reused_old;
    j["valid_acc"] = valid_acc;
    j["test_acc"] = test_acc;
    j["valid_acc_hex"] = valid_acc_hex;
    j["test_acc_hex"] = test_acc_hex;
    j["seconds"] = seconds;
    j["action_text"] = action_text;
    j["episode"] = episode;
    j["step"] = step;
    return j;
}

TaskRecord TaskRecord::from_json(const nlohmann::json& j) {
    TaskRecord r;
    r.task = j.at("task").get<int>();
    r.used = j.at("used").get<std::vector<std::vector<int>>>();
    r.fresh = j.at("fresh").get<std::vector<std::vector<int>>>();
    r.filter_k = j.at("filter_k").get<std::vector<int>>();
    r.param_count = j.at("param_count").get<long long>();
    r.new_count = j.at("new_count").get<int>();
    r.reused_old = j.at("reused_old").get<int>();
    r.valid_acc = j.at("valid_acc").get<double>();
    r.test_acc = j.at("test_acc").get<double>();
    r.valid_acc_hex = j.at("valid_acc_hex").get<std::string>();
    r.test_acc_hex = j.at("test_acc_hex").get<std::string>();
    r.seconds = j.at("seconds").get<double>();
    r.action_text = j.at("action_text").get<std::string>();
    r.episode = j.at("episode").get<int>();
    r.step = j.at("step").get<int>();
    return r;
}

Provenance Provenance::create(const HyperNetSpec& spec) {
    Provenance p;
    p.first_task.assign(static_cast<std::size_t>(spec.total_slots()), 0);
    p.filter_history.assign(static_cast<std::size_t>(spec.conv_layers()), {});
    return p;
}

bool Provenance::has_task(int t) const {
    for (const auto& r : tasks)
        if (r.task == t) return true;
    return false;
}

const TaskRecord& Provenance::record(int t) const {
    for (const auto& r : tasks)
        if (r.task == t) return r;
    throw InvariantError("no record for task " + std::to_string(t));
}

nlohmann::json Provenance::to_json() const {
    nlohmann::json j;
    j["first_task"] = first_task;
    j["filter_history"] = filter_history;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : tasks) arr.push_back(r.to_json());
    j["tasks"] = arr;
    return j;
}

Provenance Provenance::from_json(const nlohmann::json& j) {
    Provenance p;
    p.first_task = j.at("first_task").get<std::vector<int>>();
    p.filter_history = j.at("filter_history").get<std::vector<std::vector<int>>>();
    for (const auto& item : j.at("tasks")) p.tasks.push_back(TaskRecord::from_json(item));
    return p;
}

std::string double_to_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double hex_to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw ParseError("bad hex float '" + s + "'");
    return v;
}

} // namespace clnas
