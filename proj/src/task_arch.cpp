#include "clnas/task_arch.hpp"

#include <algorithm>
#include <cmath>

#include "clnas/errors.hpp"
#include "clnas/optimizer.hpp"

namespace clnas {

namespace {

std::string w_name(const HyperNetSpec& spec, int layer) {
    const bool conv = spec.layers[static_cast<std::size_t>(layer)].kind == LayerKind::Conv;
    return "L" + std::to_string(layer) + (conv ? "/K" : "/W");
}

std::string b_name(int layer) { return "L" + std::to_string(layer) + "/b"; }

int demoted(ActionMode mode, int a) {
    if (mode == ActionMode::Binary) return 0;
    return a == 1 ? 3 : 2; // keep the vote bit, flip use -> drop
}

int promoted(ActionMode mode, int a) {
    if (mode == ActionMode::Binary) return 1;
    return a == 3 ? 1 : 0; // keep the vote bit, flip drop -> use
}

/// Compact layout over the given widths; `ks` holds the kernel per conv layer.
NetLayout make_layout(const HyperNetSpec& spec, const std::vector<int>& widths,
                      const std::vector<int>& ks) {
    NetLayout layout;
    const int convs = spec.conv_layers();
    int h = spec.input_h, w = spec.input_w;
    for (int i = 0; i < spec.depth(); ++i) {
        const int n = widths[static_cast<std::size_t>(i)];
        if (i < convs) {
            ConvSpec c;
            c.in_c = i == 0 ? spec.input_channels : widths[static_cast<std::size_t>(i - 1)];
            c.in_h = h;
            c.in_w = w;
            c.filters = n;
            c.k = ks[static_cast<std::size_t>(i)];
            c.relu = true;
            c.w = w_name(spec, i);
            c.b = b_name(i);
            layout.layers.push_back(c);
            h -= c.k - 1;
            w -= c.k - 1;
        } else {
            DenseSpec d;
            if (i == convs && convs > 0)
                d.in = widths[static_cast<std::size_t>(i - 1)] * h * w;
            else
                d.in = i == 0 ? spec.input_dim : widths[static_cast<std::size_t>(i - 1)];
            d.out = n;
            d.relu = true;
            d.w = w_name(spec, i);
            d.b = b_name(i);
            layout.layers.push_back(d);
        }
    }
    DenseSpec head;
    head.in = widths.back();
    head.out = spec.classes;
    head.relu = false;
    head.w = "head/W";
    head.b = "head/b";
    layout.layers.push_back(head);
    return layout;
}

std::vector<int> widths_of(const std::vector<std::vector<int>>& used) {
    std::vector<int> w;
    for (const auto& u : used) w.push_back(static_cast<int>(u.size()));
    return w;
}

/// Pulls every hidden-layer entry for the given slot selection out of the
/// bank, frozen (mask 0). Kernel sub-blocks and the flatten crop follow `ks`.
ParamStore gather(const HyperNetSpec& spec, const SlotBank& bank,
                  const std::vector<std::vector<int>>& used, const std::vector<int>& ks) {
    ParamStore params;
    const int convs = spec.conv_layers();
    int h = spec.input_h, w = spec.input_w;
    for (int i = 0; i < spec.depth(); ++i) {
        const auto& cur = used[static_cast<std::size_t>(i)];
        const int n = static_cast<int>(cur.size());
        const auto& bw = bank.store.at(bank_weight_name(spec, i));
        const auto& bb = bank.store.at(bank_bias_name(i));
        if (i < convs) {
            const int k = ks[static_cast<std::size_t>(i)];
            const int prevn = i == 0 ? spec.input_channels
                                     : static_cast<int>(used[static_cast<std::size_t>(i - 1)].size());
            auto& e = params.add(w_name(spec, i),
                                 {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(prevn),
                                  static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)});
            for (int f = 0; f < n; ++f)
                for (int c = 0; c < prevn; ++c) {
                    const int uf = cur[static_cast<std::size_t>(f)];
                    const int uc = i == 0 ? c : used[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)];
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            e.values[idx4(e.dims, f, c, ky, kx)] =
                                bw.values[idx4(bw.dims, uf, uc, ky, kx)];
                }
            h -= k - 1;
            w -= k - 1;
        } else if (i == convs && convs > 0) {
            const auto& prev = used[static_cast<std::size_t>(i - 1)];
            const int prevn = static_cast<int>(prev.size());
            auto& e = params.add(w_name(spec, i), {static_cast<std::uint32_t>(n),
                                                   static_cast<std::uint32_t>(prevn * h * w)});
            auto m = e.matrix();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < prevn; ++c)
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x)
                            m(r, (c * h + y) * w + x) =
                                bw.values[idx4(bw.dims, cur[static_cast<std::size_t>(r)],
                                               prev[static_cast<std::size_t>(c)], y, x)];
        } else {
            const int prevn = i == 0 ? spec.input_dim
                                     : static_cast<int>(used[static_cast<std::size_t>(i - 1)].size());
            auto& e = params.add(w_name(spec, i),
                                 {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(prevn)});
            auto m = e.matrix();
            const auto bm = bw.matrix();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < prevn; ++c) {
                    const int uc = i == 0 ? c : used[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)];
                    m(r, c) = bm(cur[static_cast<std::size_t>(r)], uc);
                }
        }
        auto& be = params.add(b_name(i), {static_cast<std::uint32_t>(n)});
        for (int r = 0; r < n; ++r)
            be.values[r] = bb.values[cur[static_cast<std::size_t>(r)]];
    }
    for (auto& [name, e] : params) std::fill(e.mask.begin(), e.mask.end(), 0);
    return params;
}

double glorot_limit(int fan_in, int fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }

} // namespace

ActionString effective_actions(const HyperNetSpec& spec, const Provenance& prov,
                               const ActionString& decoded) {
    if (decoded.size() != spec.total_slots())
        throw ConfigError("action string length " + std::to_string(decoded.size()) +
                          " does not match slot count " + std::to_string(spec.total_slots()));
    ActionString eff = decoded;
    int base = 0;
    for (int i = 0; i < spec.depth(); ++i) {
        const int cap = spec.layers[static_cast<std::size_t>(i)].capacity;
        if (spec.max_new_per_layer > 0) {
            int kept = 0;
            for (int idx = 0; idx < cap; ++idx) {
                auto& a = eff.a[static_cast<std::size_t>(base + idx)];
                if (action_uses(eff.mode, a) && prov.first_task[static_cast<std::size_t>(base + idx)] == 0) {
                    if (kept < spec.max_new_per_layer)
                        ++kept;
                    else
                        a = demoted(eff.mode, a);
                }
            }
        }
        bool any = false;
        for (int idx = 0; idx < cap; ++idx)
            any = any || action_uses(eff.mode, eff.a[static_cast<std::size_t>(base + idx)]);
        if (!any) {
            auto& a = eff.a[static_cast<std::size_t>(base)];
            a = promoted(eff.mode, a);
        }
        base += cap;
    }
    return eff;
}

TaskArchitecture build(const HyperNetSpec& spec, const SlotBank& bank, const Provenance& prov,
                       const ActionString& decoded, int t, Rng& rng) {
    spec.validate();
    if (t < 2) throw ConfigError("build serves tasks >= 2; task 1 uses build_initial");
    TaskArchitecture arch;
    arch.task = t;
    arch.actions = effective_actions(spec, prov, decoded);

    const int depth = spec.depth();
    arch.used.resize(static_cast<std::size_t>(depth));
    arch.is_new.resize(static_cast<std::size_t>(depth));
    int base = 0;
    for (int i = 0; i < depth; ++i) {
        const int cap = spec.layers[static_cast<std::size_t>(i)].capacity;
        for (int idx = 0; idx < cap; ++idx) {
            if (action_uses(arch.actions.mode, arch.actions.a[static_cast<std::size_t>(base + idx)])) {
                const bool fresh = prov.first_task[static_cast<std::size_t>(base + idx)] == 0;
                arch.used[static_cast<std::size_t>(i)].push_back(idx);
                arch.is_new[static_cast<std::size_t>(i)].push_back(fresh ? 1 : 0);
                if (fresh)
                    ++arch.new_count;
                else
                    ++arch.reused_old;
            }
        }
        base += cap;
    }
    const int convs = spec.conv_layers();
    for (int i = 0; i < convs; ++i) arch.filter_k.push_back(spec.layers[static_cast<std::size_t>(i)].k);

    const auto widths = widths_of(arch.used);
    arch.layout = make_layout(spec, widths, arch.filter_k);
    arch.params = gather(spec, bank, arch.used, arch.filter_k);

    // Trainability and fresh initialization, in fixed iteration order.
    int h = spec.input_h, w = spec.input_w;
    for (int i = 0; i < depth; ++i) {
        const int n = widths[static_cast<std::size_t>(i)];
        const auto& news = arch.is_new[static_cast<std::size_t>(i)];
        auto prev_new = [&](int c) {
            return i > 0 && arch.is_new[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)] != 0;
        };
        auto& e = arch.params.at(w_name(spec, i));
        if (i < convs) {
            const int k = arch.filter_k[static_cast<std::size_t>(i)];
            const int prevn = static_cast<int>(e.dims[1]);
            const double lim = glorot_limit(prevn * k * k, n * k * k);
            const bool ring = bank.fresh_ring[static_cast<std::size_t>(i)] != 0;
            for (int f = 0; f < n; ++f)
                for (int c = 0; c < prevn; ++c) {
                    const bool fresh_slice = news[static_cast<std::size_t>(f)] != 0 || (i > 0 && prev_new(c));
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const Eigen::Index at = idx4(e.dims, f, c, ky, kx);
                            if (fresh_slice) {
                                e.values[at] = rng.uniform(-lim, lim);
                                e.mask[static_cast<std::size_t>(at)] = 1;
                            } else if (ring && (ky == k - 1 || kx == k - 1)) {
                                // Cells added by the latest kernel growth: keep
                                // their averaged bank values, train them once.
                                e.mask[static_cast<std::size_t>(at)] = 1;
                            }
                        }
                }
            h -= k - 1;
            w -= k - 1;
        } else {
            const int in = static_cast<int>(e.dims[1]);
            const double lim = glorot_limit(in, n);
            auto m = e.matrix();
            const bool flat = i == convs && convs > 0;
            const int span = flat ? h * w : 1; // input columns per previous unit
            for (int c = 0; c < in; ++c)
                for (int r = 0; r < n; ++r) {
                    const int pu = c / span;
                    const bool trainable = news[static_cast<std::size_t>(r)] != 0 ||
                                           (i > 0 && prev_new(pu));
                    if (trainable) {
                        m(r, c) = rng.uniform(-lim, lim);
                        e.mask[static_cast<std::size_t>(static_cast<Eigen::Index>(c) * n + r)] = 1;
                    }
                }
        }
        auto& be = arch.params.at(b_name(i));
        for (int r = 0; r < n; ++r)
            if (news[static_cast<std::size_t>(r)] != 0) {
                be.values[r] = 0.0;
                be.mask[static_cast<std::size_t>(r)] = 1;
            }
    }

    // Private output head: always fresh, always trainable.
    const int last = widths.back();
    auto& hw = arch.params.add("head/W", {static_cast<std::uint32_t>(spec.classes),
                                          static_cast<std::uint32_t>(last)});
    const double hlim = glorot_limit(last, spec.classes);
    for (Eigen::Index j = 0; j < hw.values.size(); ++j) hw.values[j] = rng.uniform(-hlim, hlim);
    arch.params.add("head/b", {static_cast<std::uint32_t>(spec.classes)});
    return arch;
}

TaskArchitecture build_initial(const HyperNetSpec& spec, const std::vector<int>& widths,
                               ActionMode mode, Rng& rng) {
    spec.validate();
    if (static_cast<int>(widths.size()) != spec.depth())
        throw ConfigError("starting widths must name every layer");
    for (int i = 0; i < spec.depth(); ++i) {
        const int cap = spec.layers[static_cast<std::size_t>(i)].capacity;
        if (widths[static_cast<std::size_t>(i)] < 1 || widths[static_cast<std::size_t>(i)] > cap)
            throw ConfigError("starting width of layer " + std::to_string(i) + " outside [1," +
                              std::to_string(cap) + "]");
    }
    TaskArchitecture arch;
    arch.task = 1;
    arch.actions.mode = mode;
    for (int i = 0; i < spec.depth(); ++i) {
        const int cap = spec.layers[static_cast<std::size_t>(i)].capacity;
        const int n = widths[static_cast<std::size_t>(i)];
        std::vector<int> u;
        for (int idx = 0; idx < n; ++idx) u.push_back(idx);
        arch.used.push_back(u);
        arch.is_new.emplace_back(static_cast<std::size_t>(n), 1);
        for (int idx = 0; idx < cap; ++idx) {
            const bool on = idx < n;
            arch.actions.a.push_back(mode == ActionMode::Binary ? (on ? 1 : 0) : (on ? 0 : 2));
        }
    }
    arch.new_count = 0;
    for (int v : widths) arch.new_count += v;
    const int convs = spec.conv_layers();
    for (int i = 0; i < convs; ++i) arch.filter_k.push_back(spec.layers[static_cast<std::size_t>(i)].k);
    arch.layout = make_layout(spec, widths, arch.filter_k);

    int hh = spec.input_h, ww = spec.input_w;
    for (int i = 0; i < spec.depth(); ++i) {
        const int n = widths[static_cast<std::size_t>(i)];
        if (i < convs) {
            const int k = arch.filter_k[static_cast<std::size_t>(i)];
            const int prevn = i == 0 ? spec.input_channels : widths[static_cast<std::size_t>(i - 1)];
            auto& e = arch.params.add(w_name(spec, i),
                                      {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(prevn),
                                       static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)});
            const double lim = glorot_limit(prevn * k * k, n * k * k);
            for (int f = 0; f < n; ++f)
                for (int c = 0; c < prevn; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            e.values[idx4(e.dims, f, c, ky, kx)] = rng.uniform(-lim, lim);
            hh -= k - 1;
            ww -= k - 1;
        } else {
            const int in = i == convs && convs > 0 ? widths[static_cast<std::size_t>(i - 1)] * hh * ww
                           : i == 0               ? spec.input_dim
                                                  : widths[static_cast<std::size_t>(i - 1)];
            auto& e = arch.params.add(w_name(spec, i),
                                      {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(in)});
            const double lim = glorot_limit(in, n);
            for (Eigen::Index j = 0; j < e.values.size(); ++j) e.values[j] = rng.uniform(-lim, lim);
        }
        arch.params.add(b_name(i), {static_cast<std::uint32_t>(n)});
    }
    const int last = widths.back();
    auto& hw = arch.params.add("head/W", {static_cast<std::uint32_t>(spec.classes),
                                          static_cast<std::uint32_t>(last)});
    const double hlim = glorot_limit(last, spec.classes);
    for (Eigen::Index j = 0; j < hw.values.size(); ++j) hw.values[j] = rng.uniform(-hlim, hlim);
    arch.params.add("head/b", {static_cast<std::uint32_t>(spec.classes)});
    return arch;
}

TaskArchitecture rebuild_for_eval(const HyperNetSpec& spec, const SlotBank& bank,
                                  const TaskRecord& record) {
    spec.validate();
    if (static_cast<int>(record.used.size()) != spec.depth())
        throw InvariantError("task record depth does not match the hyper-network");
    TaskArchitecture arch;
    arch.task = record.task;
    arch.used = record.used;
    arch.filter_k = record.filter_k;
    for (std::size_t i = 0; i < record.used.size(); ++i) {
        std::vector<std::uint8_t> flags;
        for (int s : record.used[i]) {
            const bool fresh = std::find(record.fresh[i].begin(), record.fresh[i].end(), s) !=
                               record.fresh[i].end();
            flags.push_back(fresh ? 1 : 0);
        }
        arch.is_new.push_back(flags);
    }
    arch.new_count = record.new_count;
    arch.reused_old = record.reused_old;
    arch.layout = make_layout(spec, widths_of(arch.used), arch.filter_k);
    arch.params = gather(spec, bank, arch.used, arch.filter_k);

    const std::string hw = head_weight_name(record.task), hb = head_bias_name(record.task);
    if (!bank.store.has(hw) || !bank.store.has(hb))
        throw InvariantError("bank is missing the stored head for task " + std::to_string(record.task));
    const auto& shw = bank.store.at(hw);
    const int last = static_cast<int>(arch.used.back().size());
    if (shw.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(spec.classes),
                                               static_cast<std::uint32_t>(last)})
        throw InvariantError("stored head for task " + std::to_string(record.task) +
                             " does not match the recorded architecture");
    auto& cw = arch.params.add("head/W", shw.dims);
    cw.values = shw.values;
    std::fill(cw.mask.begin(), cw.mask.end(), 0);
    auto& cb = arch.params.add("head/b", bank.store.at(hb).dims);
    cb.values = bank.store.at(hb).values;
    std::fill(cb.mask.begin(), cb.mask.end(), 0);

    arch.trained = true;
    arch.committed = true;
    arch.valid_acc = record.valid_acc;
    arch.test_acc = record.test_acc;
    return arch;
}

void train_new(TaskArchitecture& arch, const Eigen::MatrixXd& x, const std::vector<int>& labels,
               int epochs, int batch_size, double lr, Rng& rng) {
    if (arch.committed) throw InvariantError("training a committed architecture");
    if (epochs < 0 || batch_size < 1) throw ConfigError("bad training budget");
    const int n = static_cast<int>(x.cols());
    if (n == 0 || static_cast<std::size_t>(n) != labels.size())
        throw ConfigError("train_new: dataset size mismatch");
    auto opt = OptimizerState::adam(lr);
    opt.init(arch.params);
    arch.loss_curve.clear();
    for (int e = 0; e < epochs; ++e) {
        const auto perm = rng.permutation(n);
        double total = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += batch_size) {
            const int m = std::min(batch_size, n - start);
            Eigen::MatrixXd bx(x.rows(), m);
            std::vector<int> by(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                const int src = perm[static_cast<std::size_t>(start + j)];
                bx.col(j) = x.col(src);
                by[static_cast<std::size_t>(j)] = labels[static_cast<std::size_t>(src)];
            }
            try {
                auto lg = loss_and_grad(arch.params, arch.layout, bx, by, batches);
                opt.step(arch.params, lg.grads);
                total += lg.loss;
            } catch (const NumericError&) {
                arch.failed = true;
                return;
            }
            ++batches;
        }
        arch.loss_curve.push_back(total / batches);
    }
    arch.trained = true;
}

double evaluate(const TaskArchitecture& arch, const Eigen::MatrixXd& x,
                const std::vector<int>& labels) {
    if (!arch.trained) throw InvariantError("evaluating an untrained architecture");
    return accuracy(arch.params, arch.layout, x, labels);
}

long long param_count(const TaskArchitecture& arch) {
    long long total = 0;
    for (const auto& l : arch.layout.layers) {
        if (const auto* d = std::get_if<DenseSpec>(&l))
            total += static_cast<long long>(d->out) * d->in + d->out;
        else {
            const auto& c = std::get<ConvSpec>(l);
            total += static_cast<long long>(c.filters) * c.in_c * c.k * c.k + c.filters;
        }
    }
    return total;
}

void commit(TaskArchitecture& arch, const HyperNetSpec& spec, SlotBank& bank, Provenance& prov) {
    if (arch.committed || prov.has_task(arch.task))
        throw InvariantError("task " + std::to_string(arch.task) + " already committed");
    if (!arch.trained || arch.failed)
        throw InvariantError("committing an untrained or failed candidate");

    const int convs = spec.conv_layers();
    int h = spec.input_h, w = spec.input_w;
    for (int i = 0; i < spec.depth(); ++i) {
        const auto& cur = arch.used[static_cast<std::size_t>(i)];
        const int n = static_cast<int>(cur.size());
        const auto& e = arch.params.at(w_name(spec, i));
        auto& bw = bank.store.at(bank_weight_name(spec, i));
        if (i < convs) {
            const int k = arch.filter_k[static_cast<std::size_t>(i)];
            const int prevn = static_cast<int>(e.dims[1]);
            for (int f = 0; f < n; ++f)
                for (int c = 0; c < prevn; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const Eigen::Index at = idx4(e.dims, f, c, ky, kx);
                            if (!e.mask[static_cast<std::size_t>(at)]) continue;
                            const int uf = cur[static_cast<std::size_t>(f)];
                            const int uc =
                                i == 0 ? c
                                       : arch.used[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)];
                            const Eigen::Index dst = idx4(bw.dims, uf, uc, ky, kx);
                            bw.values[dst] = e.values[at];
                            bw.mask[static_cast<std::size_t>(dst)] = 1;
                        }
            h -= k - 1;
            w -= k - 1;
        } else if (i == convs && convs > 0) {
            const auto& prev = arch.used[static_cast<std::size_t>(i - 1)];
            const auto m = e.matrix();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < static_cast<int>(prev.size()); ++c)
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) {
                            const int col = (c * h + y) * w + x;
                            if (!e.mask[static_cast<std::size_t>(static_cast<Eigen::Index>(col) * n + r)])
                                continue;
                            const Eigen::Index dst =
                                idx4(bw.dims, cur[static_cast<std::size_t>(r)],
                                     prev[static_cast<std::size_t>(c)], y, x);
                            bw.values[dst] = m(r, col);
                            bw.mask[static_cast<std::size_t>(dst)] = 1;
                        }
        } else {
            const int in = static_cast<int>(e.dims[1]);
            const auto m = e.matrix();
            auto bm = bw.matrix();
            for (int c = 0; c < in; ++c)
                for (int r = 0; r < n; ++r) {
                    if (!e.mask[static_cast<std::size_t>(static_cast<Eigen::Index>(c) * n + r)]) continue;
                    const int ur = cur[static_cast<std::size_t>(r)];
                    const int uc =
                        i == 0 ? c
                               : arch.used[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)];
                    bm(ur, uc) = m(r, c);
                    bw.mask[static_cast<std::size_t>(static_cast<Eigen::Index>(uc) * bw.dims[0] + ur)] = 1;
                }
        }
        const auto& be = arch.params.at(b_name(i));
        auto& bb = bank.store.at(bank_bias_name(i));
        for (int r = 0; r < n; ++r)
            if (be.mask[static_cast<std::size_t>(r)]) {
                bb.values[cur[static_cast<std::size_t>(r)]] = be.values[r];
                bb.mask[static_cast<std::size_t>(cur[static_cast<std::size_t>(r)])] = 1;
            }
    }

    const auto& hw = arch.params.at("head/W");
    auto& shw = bank.store.add(head_weight_name(arch.task), hw.dims);
    shw.values = hw.values;
    const auto& hb = arch.params.at("head/b");
    auto& shb = bank.store.add(head_bias_name(arch.task), hb.dims);
    shb.values = hb.values;

    TaskRecord rec;
    rec.task = arch.task;
    rec.used = arch.used;
    rec.fresh.resize(arch.used.size());
    for (std::size_t i = 0; i < arch.used.size(); ++i)
        for (std::size_t j = 0; j < arch.used[i].size(); ++j)
            if (arch.is_new[i][j]) {
                rec.fresh[i].push_back(arch.used[i][j]);
                prov.first_task[static_cast<std::size_t>(
                    slot_id(spec, static_cast<int>(i), arch.used[i][j]))] = arch.task;
            }
    rec.filter_k = arch.filter_k;
    rec.param_count = param_count(arch);
    rec.new_count = arch.new_count;
    rec.reused_old = arch.reused_old;
    rec.valid_acc = arch.valid_acc;
    rec.test_acc = arch.test_acc;
    rec.valid_acc_hex = double_to_hex(arch.valid_acc);
    rec.test_acc_hex = double_to_hex(arch.test_acc);
    rec.action_text = arch.actions.text();
    prov.tasks.push_back(rec);
    for (int i = 0; i < convs; ++i)
        prov.filter_history[static_cast<std::size_t>(i)].push_back(
            arch.filter_k[static_cast<std::size_t>(i)]);

    std::fill(bank.fresh_ring.begin(), bank.fresh_ring.end(), 0);
    arch.committed = true;
}

} // namespace clnas
