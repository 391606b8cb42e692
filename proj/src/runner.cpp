#include "clnas/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "clnas/errors.hpp"
#include "clnas/filter_growth.hpp"
#include "clnas/rng.hpp"

namespace clnas {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_g(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    f << text;
    if (!f) throw ConfigError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    std::istringstream is(read_text_file(path));
    return json::parse(is);
}

/// Everything the search needs to know about one evaluated action string.
struct CandidateOutcome {
    ActionString effective;
    double accuracy = -1.0; // -1 marks diverged training
    int new_neurons = 0;
    double reward = kFailedReward;
    bool failed = true;
};

std::string summary_csv_text(const Provenance& prov) {
    std::ostringstream os;
    os << "task,test_acc,params,reused_old,new,seconds\n";
    for (const TaskRecord& r : prov.tasks)
        os << r.task << ',' << fmt_g(r.test_acc) << ',' << r.param_count << ',' << r.reused_old
           << ',' << r.new_count << ',' << fmt_g(r.seconds) << '\n';
    return os.str();
}

std::string record_json_text(const TaskRecord& r) { return r.to_json().dump(2) + "\n"; }

json summary_json(const RunResult& R) {
    json js;
    js["mode"] = R.cfg.mode;
    js["seed"] = R.cfg.seed;
    js["tasks"] = json::array();
    for (const TaskRecord& r : R.prov.tasks) {
        json jt;
        jt["task"] = r.task;
        jt["valid_acc"] = r.valid_acc;
        jt["test_acc"] = r.test_acc;
        jt["params"] = r.param_count;
        jt["new"] = r.new_count;
        jt["reused_old"] = r.reused_old;
        jt["seconds"] = r.seconds;
        jt["action"] = r.action_text;
        jt["episode"] = r.episode;
        jt["step"] = r.step;
        json layers = json::array();
        for (std::size_t i = 0; i < r.used.size(); ++i) {
            json jl;
            jl["layer"] = static_cast<int>(i) + 1;
            jl["used"] = static_cast<int>(r.used[i].size());
            jl["new"] = static_cast<int>(r.fresh[i].size());
            layers.push_back(jl);
        }
        jt["layers"] = layers;
        jt["filter_k"] = r.filter_k;
        js["tasks"].push_back(jt);
    }
    std::vector<int> kernels;
    for (const HyperLayerSpec& l : R.spec.layers)
        if (l.kind == LayerKind::Conv) kernels.push_back(l.k);
    js["kernel_sizes"] = kernels;
    js["explore_flags"] = R.explore_flags;
    js["skipped_updates"] = R.skipped_updates;
    js["warnings"] = R.warnings;
    js["total_seconds"] = R.total_seconds;
    return js;
}

void write_artifacts(const ExperimentConfig& cfg, const RunResult& R) {
    const std::string dir = cfg.out;
    write_text_file(dir + "/" + kSummaryCsvFile, summary_csv_text(R.prov));
    write_text_file(dir + "/" + kProvenanceFile, R.prov.to_json().dump(2) + "\n");
    for (const TaskRecord& r : R.prov.tasks)
        write_text_file(dir + "/" + arch_file_name(r.task), record_json_text(r));
    R.bank.store.save_file(dir + "/" + kBankFile);
    write_text_file(dir + "/" + kSummaryJsonFile, summary_json(R).dump(2) + "\n");

    json ck;
    std::vector<std::string> names = {kSnapshotFile,    kIterationsFile, kSummaryCsvFile,
                                      kSummaryJsonFile, kProvenanceFile, kBankFile};
    for (const TaskRecord& r : R.prov.tasks) names.push_back(arch_file_name(r.task));
    for (const std::string& n : names) ck[n] = file_checksum(dir + "/" + n);
    write_text_file(dir + "/" + kChecksumFile, ck.dump(2) + "\n");
}

} // namespace

std::string arch_file_name(int task) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "arch_task%04d.json", task);
    return buf;
}

std::string file_checksum(const std::string& path) {
    const std::string bytes = read_text_file(path);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

RunResult run_sequence(const ExperimentConfig& cfg) {
    const auto run_start = std::chrono::steady_clock::now();
    cfg.validate();

    RunResult R;
    R.cfg = cfg;
    R.spec = spec_from_config(cfg);
    const std::vector<int> widths = initial_widths_from_config(cfg);
    const std::vector<TaskDataset> data = datasets_from_config(cfg);
    R.bank = SlotBank::create(R.spec);
    R.prov = Provenance::create(R.spec);

    const bool standard = cfg.mode == "standard-controller";
    const ActionMode amode =
        cfg.mode == "cleas-c" ? ActionMode::FourWay : ActionMode::Binary;
    const SlotLayout layout = R.spec.slot_layout();
    const int n = layout.slots();
    const int input_width =
        standard ? alphabet_size(amode) : alphabet_size(amode) + R.spec.depth();

    Rng ctrl_rng = Rng::stream(cfg.seed, "controller");
    R.ctrl = make_controller(input_width, cfg.controller_hidden, alphabet_size(amode), ctrl_rng);
    OptimizerState opt = OptimizerState::rmsprop(cfg.controller_lr);
    opt.init(R.ctrl.params);
    Baseline baseline{cfg.baseline_beta};

    std::ofstream iters;
    if (!cfg.out.empty()) {
        fs::create_directories(cfg.out);
        write_text_file(cfg.out + "/" + kSnapshotFile, cfg.snapshot());
        iters.open(cfg.out + "/" + kIterationsFile, std::ios::binary | std::ios::trunc);
        if (!iters) throw ConfigError("cannot write to run directory '" + cfg.out + "'");
        iters << "task,episode,step,accuracy,new_neurons,reward,baseline\n";
        iters.flush();
    }
    auto emit = [&](const StepLog& s) {
        R.iterations.push_back(s);
        if (iters.is_open())
            iters << s.task << ',' << s.episode << ',' << s.step << ',' << fmt_g(s.accuracy)
                  << ',' << s.new_neurons << ',' << fmt_g(s.reward) << ',' << fmt_g(s.baseline)
                  << '\n';
    };

    for (int t = 1; t <= cfg.tasks; ++t) {
        const auto task_start = std::chrono::steady_clock::now();
        const TaskDataset& td = data[static_cast<std::size_t>(t - 1)];
        TaskArchitecture winner;
        int win_episode = 0, win_step = 0;

        if (t == 1) {
            Rng trng = Rng::stream(cfg.seed, "task", 1);
            winner = build_initial(R.spec, widths, amode, trng);
            train_new(winner, td.train.x, td.train.labels, cfg.epochs, cfg.batch, cfg.lr, trng);
            if (winner.failed) throw NumericError("task 1: training diverged");
            winner.valid_acc = evaluate(winner, td.valid.x, td.valid.labels);
        } else {
            Rng explore_rng = Rng::stream(cfg.seed, "explore", static_cast<std::uint64_t>(t));
            Rng sample_rng = Rng::stream(cfg.seed, "sample", static_cast<std::uint64_t>(t));
            Rng rollout_rng = Rng::stream(cfg.seed, "rollout", static_cast<std::uint64_t>(t));
            const std::string cand_stream = "candidate-t" + std::to_string(t);
            std::map<std::string, CandidateOutcome> cache;
            std::vector<int> flags;
            bool have_best = false;
            double best_reward = 0.0;
            StateString s;
            std::vector<StepLog> pending;

            for (int h = 1; h <= cfg.episodes; ++h) {
                bool restart = true;
                if (!standard) {
                    const bool w = explore_rng.bernoulli(cfg.explore_p);
                    restart = (h == 1) || w;
                    if (restart) s = random_state(amode, layout, explore_rng);
                }
                flags.push_back(restart ? 1 : 0);

                EpisodeTrace trace;
                trace.standard_mode = standard;
                pending.clear();

                for (int u = 1; u <= cfg.steps; ++u) {
                    ActionString decoded;
                    EpisodeStep st;
                    if (standard) {
                        Rollout roll = standard_rollout(R.ctrl, amode, n, true, &rollout_rng);
                        decoded = roll.actions;
                        st.rollout = std::move(roll);
                    } else {
                        const Eigen::MatrixXd rows = policy_forward(R.ctrl, s);
                        decoded = cfg.sample_actions ? sample_rows(rows, amode, sample_rng)
                                                     : decode(rows, amode);
                        st.state = s;
                        st.actions = decoded;
                    }

                    ActionString target = decoded;
                    if (cfg.mode == "reuse-all")
                        for (int j = 0; j < n; ++j)
                            if (R.prov.first_task[static_cast<std::size_t>(j)] != 0)
                                target.a[static_cast<std::size_t>(j)] = 1;

                    const ActionString eff = effective_actions(R.spec, R.prov, target);
                    const std::string key = eff.text();
                    CandidateOutcome out;
                    auto it = cache.find(key);
                    if (it != cache.end()) {
                        out = it->second;
                    } else {
                        Rng crng = Rng::stream(cfg.seed, cand_stream, fnv1a64(key));
                        TaskArchitecture cand = build(R.spec, R.bank, R.prov, target, t, crng);
                        train_new(cand, td.train.x, td.train.labels, cfg.epochs, cfg.batch,
                                  cfg.lr, crng);
                        out.effective = cand.actions;
                        out.new_neurons = cand.new_count;
                        out.failed = cand.failed;
                        if (!cand.failed) {
                            cand.valid_acc = evaluate(cand, td.valid.x, td.valid.labels);
                            out.accuracy = cand.valid_acc;
                            out.reward = reward(out.accuracy, out.new_neurons, cfg.alpha);
                        }
                        cache.emplace(key, out);
                        // Strict inequality keeps the earliest candidate on ties;
                        // repeats of a cached string can never displace it.
                        if (!cand.failed && (!have_best || out.reward > best_reward)) {
                            have_best = true;
                            best_reward = out.reward;
                            win_episode = h;
                            win_step = u;
                            winner = std::move(cand);
                        }
                    }

                    st.reward = out.reward;
                    trace.steps.push_back(std::move(st));
                    pending.push_back(StepLog{t, h, u, out.accuracy, out.new_neurons, out.reward,
                                              0.0});
                    if (!standard) s = next_state(out.effective, layout);
                }

                if (!standard) trace.terminal = s;
                const UpdateResult ur = reinforce_update(R.ctrl, trace, baseline, opt);
                if (!ur.applied) ++R.skipped_updates;
                for (StepLog& row : pending) {
                    row.baseline = ur.baseline;
                    emit(row);
                }
                if (iters.is_open()) iters.flush();
            }

            if (!have_best)
                throw NumericError("task " + std::to_string(t) +
                                   ": every candidate failed training");
            R.explore_flags.push_back(std::move(flags));
        }

        winner.test_acc = evaluate(winner, td.test.x, td.test.labels);
        commit(winner, R.spec, R.bank, R.prov);
        TaskRecord& rec = R.prov.tasks.back();
        rec.episode = win_episode;
        rec.step = win_step;
        rec.seconds = elapsed_s(task_start);

        if (cfg.mode == "cleas-c" && t >= 2) {
            int offset = 0;
            for (int li = 0; li < R.spec.depth(); ++li) {
                const int cap = R.spec.layers[static_cast<std::size_t>(li)].capacity;
                if (R.spec.layers[static_cast<std::size_t>(li)].kind == LayerKind::Conv) {
                    std::vector<int> layer_actions(
                        winner.actions.a.begin() + offset,
                        winner.actions.a.begin() + offset + cap);
                    if (vote_extend(layer_actions, amode))
                        grow_conv_layer(R.spec, R.bank, li, &R.warnings);
                }
                offset += cap;
            }
        }

        for (int k = 1; k < t; ++k) {
            const TaskRecord& rk = R.prov.record(k);
            const TaskArchitecture old = rebuild_for_eval(R.spec, R.bank, rk);
            const Dataset& ts = data[static_cast<std::size_t>(k - 1)].test;
            const double acc = evaluate(old, ts.x, ts.labels);
            const double stored = hex_to_double(rk.test_acc_hex);
            if (std::memcmp(&acc, &stored, sizeof(double)) != 0)
                throw InvariantError("task " + std::to_string(k) +
                                     " accuracy drifted after committing task " +
                                     std::to_string(t) + ": stored " + rk.test_acc_hex +
                                     ", now " + double_to_hex(acc));
        }
    }

    R.total_seconds = elapsed_s(run_start);
    if (!cfg.out.empty()) {
        iters.close();
        write_artifacts(cfg, R);
    }
    return R;
}

int write_report(const std::string& dir, std::ostream& os) {
    const ExperimentConfig cfg = ExperimentConfig::parse_file(dir + "/" + kSnapshotFile);
    const Provenance prov = Provenance::from_json(read_json_file(dir + "/" + kProvenanceFile));

    os << "run " << dir << ": mode=" << cfg.mode << " seed=" << cfg.seed
       << " tasks=" << cfg.tasks << "\n\n";
    os << read_text_file(dir + "/" + kSummaryCsvFile);

    os << "\nper-layer allocation\n";
    os << "task,layer,used,reused_old,new\n";
    for (const TaskRecord& r : prov.tasks)
        for (std::size_t i = 0; i < r.used.size(); ++i) {
            const int used = static_cast<int>(r.used[i].size());
            const int fresh = static_cast<int>(r.fresh[i].size());
            os << r.task << ',' << (i + 1) << ',' << used << ',' << (used - fresh) << ','
               << fresh << '\n';
        }

    bool any_conv = false;
    for (const TaskRecord& r : prov.tasks) any_conv = any_conv || !r.filter_k.empty();
    if (any_conv) {
        os << "\nkernel sizes\n";
        os << "task,layer,k\n";
        for (const TaskRecord& r : prov.tasks)
            for (std::size_t i = 0; i < r.filter_k.size(); ++i)
                os << r.task << ',' << (i + 1) << ',' << r.filter_k[i] << '\n';
    }
    return 0;
}

AuditResult audit_run(const std::string& dir, std::ostream& os) {
    AuditResult res;
    auto fail = [&](const std::string& m) { res.violations.push_back(m); };

    try {
        json ck;
        try {
            ck = read_json_file(dir + "/" + kChecksumFile);
        } catch (const std::exception& e) {
            fail(std::string("checksum manifest unreadable: ") + e.what());
        }
        if (res.violations.empty()) {
            for (const char* req : {kSnapshotFile, kIterationsFile, kSummaryCsvFile,
                                    kSummaryJsonFile, kProvenanceFile, kBankFile})
                if (!ck.contains(req)) fail(std::string("checksum manifest missing ") + req);
            for (auto it = ck.begin(); it != ck.end(); ++it) {
                std::string actual;
                try {
                    actual = file_checksum(dir + "/" + it.key());
                } catch (const std::exception&) {
                    fail("artifact missing: " + it.key());
                    continue;
                }
                if (actual != it.value().get<std::string>())
                    fail("artifact bytes changed: " + it.key());
            }
        }
        if (!res.violations.empty()) {
            // Bytes are untrusted; semantic checks would chase corruption.
            for (const std::string& v : res.violations) os << "VIOLATION: " << v << "\n";
            os << "audit FAILED: " << res.violations.size() << " violation(s)\n";
            return res;
        }

        const ExperimentConfig cfg = ExperimentConfig::parse_file(dir + "/" + kSnapshotFile);
        cfg.validate();
        Provenance prov = Provenance::from_json(read_json_file(dir + "/" + kProvenanceFile));
        HyperNetSpec spec = spec_from_config(cfg);

        SlotBank bank;
        {
            const SlotBank shape = SlotBank::create(spec); // creation-time spatial size
            bank.oh0 = shape.oh0;
            bank.ow0 = shape.ow0;
        }
        bank.fresh_ring.assign(static_cast<std::size_t>(spec.depth()), 0);
        bank.store = ParamStore::load_file(dir + "/" + kBankFile);
        for (int li = 0; li < spec.conv_layers(); ++li) {
            const auto& hist = prov.filter_history[static_cast<std::size_t>(li)];
            if (!hist.empty()) spec.layers[static_cast<std::size_t>(li)].k = hist.back();
        }
        spec.validate();

        const int T = static_cast<int>(prov.tasks.size());
        if (T == 0) fail("no committed tasks in provenance");
        for (int i = 0; i < T; ++i)
            if (prov.tasks[static_cast<std::size_t>(i)].task != i + 1)
                fail("task records are not consecutive from 1");

        // Provenance coherence: first-training assignments must match the
        // records exactly, and no slot may be fresh twice.
        std::vector<int> first(static_cast<std::size_t>(spec.total_slots()), 0);
        for (const TaskRecord& r : prov.tasks) {
            if (static_cast<int>(r.used.size()) != spec.depth() ||
                r.fresh.size() != r.used.size()) {
                fail("task " + std::to_string(r.task) + ": malformed layer lists");
                continue;
            }
            int fresh_total = 0, used_total = 0;
            for (int li = 0; li < spec.depth(); ++li) {
                const auto& u = r.used[static_cast<std::size_t>(li)];
                const auto& f = r.fresh[static_cast<std::size_t>(li)];
                const int cap = spec.layers[static_cast<std::size_t>(li)].capacity;
                for (std::size_t j = 0; j < u.size(); ++j) {
                    if (u[j] < 0 || u[j] >= cap)
                        fail("task " + std::to_string(r.task) + ": slot out of range");
                    if (j > 0 && u[j] <= u[j - 1])
                        fail("task " + std::to_string(r.task) + ": used slots not ascending");
                }
                if (u.empty()) fail("task " + std::to_string(r.task) + ": empty layer " +
                                    std::to_string(li + 1));
                for (int slot : f) {
                    if (slot < 0 || slot >= cap) {
                        fail("task " + std::to_string(r.task) + ": fresh slot out of range");
                        continue;
                    }
                    if (std::find(u.begin(), u.end(), slot) == u.end())
                        fail("task " + std::to_string(r.task) +
                             ": fresh slot not in used list");
                    int& owner = first[static_cast<std::size_t>(slot_id(spec, li, slot))];
                    if (owner != 0)
                        fail("slot trained first by two tasks (" + std::to_string(owner) +
                             " and " + std::to_string(r.task) + ")");
                    owner = r.task;
                }
                if (r.task >= 2 && spec.max_new_per_layer > 0 &&
                    static_cast<int>(f.size()) > spec.max_new_per_layer)
                    fail("task " + std::to_string(r.task) + ": new slots exceed the cap");
                fresh_total += static_cast<int>(f.size());
                used_total += static_cast<int>(u.size());
            }
            if (fresh_total != r.new_count)
                fail("task " + std::to_string(r.task) + ": new_count mismatch");
            if (used_total - fresh_total != r.reused_old)
                fail("task " + std::to_string(r.task) + ": reused_old mismatch");
        }
        if (first != prov.first_task) fail("first-training table disagrees with task records");

        for (int li = 0; li < spec.conv_layers(); ++li) {
            const auto& hist = prov.filter_history[static_cast<std::size_t>(li)];
            if (static_cast<int>(hist.size()) != T)
                fail("kernel history length mismatch on layer " + std::to_string(li + 1));
            for (std::size_t i = 1; i < hist.size(); ++i)
                if (hist[i] < hist[i - 1] || hist[i] > hist[i - 1] + 1)
                    fail("kernel history not monotone (+1 max) on layer " +
                         std::to_string(li + 1));
        }

        // Bit-exact re-evaluation of every committed task from the bank.
        const std::vector<TaskDataset> data = datasets_from_config(cfg);
        int verified = 0;
        for (const TaskRecord& r : prov.tasks) {
            TaskArchitecture arch;
            try {
                arch = rebuild_for_eval(spec, bank, r);
            } catch (const std::exception& e) {
                fail("task " + std::to_string(r.task) + ": rebuild failed: " + e.what());
                continue;
            }
            if (param_count(arch) != r.param_count)
                fail("task " + std::to_string(r.task) + ": parameter count mismatch");
            const TaskDataset& td = data[static_cast<std::size_t>(r.task - 1)];
            const double va = evaluate(arch, td.valid.x, td.valid.labels);
            const double ta = evaluate(arch, td.test.x, td.test.labels);
            const double va0 = hex_to_double(r.valid_acc_hex);
            const double ta0 = hex_to_double(r.test_acc_hex);
            if (std::memcmp(&va, &va0, sizeof(double)) != 0)
                fail("task " + std::to_string(r.task) + ": validation accuracy not bit-identical (" +
                     r.valid_acc_hex + " vs " + double_to_hex(va) + ")");
            if (std::memcmp(&ta, &ta0, sizeof(double)) != 0)
                fail("task " + std::to_string(r.task) + ": test accuracy not bit-identical (" +
                     r.test_acc_hex + " vs " + double_to_hex(ta) + ")");
            if (std::memcmp(&va, &va0, sizeof(double)) == 0 &&
                std::memcmp(&ta, &ta0, sizeof(double)) == 0)
                ++verified;
        }

        // Derived artifacts must be exactly what the records dictate.
        if (read_text_file(dir + "/" + kSummaryCsvFile) != summary_csv_text(prov))
            fail("summary.csv does not match the task records");
        for (const TaskRecord& r : prov.tasks)
            if (read_text_file(dir + "/" + arch_file_name(r.task)) != record_json_text(r))
                fail(arch_file_name(r.task) + " does not match the task records");

        if (res.violations.empty())
            os << "audit OK: " << verified << " task(s) re-evaluated bit-identically\n";
    } catch (const std::exception& e) {
        fail(std::string("audit error: ") + e.what());
    }

    res.ok = res.violations.empty();
    if (!res.ok) {
        for (const std::string& v : res.violations) os << "VIOLATION: " << v << "\n";
        os << "audit FAILED: " << res.violations.size() << " violation(s)\n";
    }
    return res;
}

} // namespace clnas
