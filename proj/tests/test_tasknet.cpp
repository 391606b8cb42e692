#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <map>

#include "clnas/data.hpp"
#include "clnas/task_arch.hpp"
#include "oracles.hpp"

using namespace clnas;

namespace {

// Two dense layers of three slots each over a 4-wide input, 3 classes.
HyperNetSpec six_slot_spec(int cap_new = 0) {
    HyperNetSpec s;
    s.layers = {{LayerKind::Dense, 3, 0}, {LayerKind::Dense, 3, 0}};
    s.input_dim = 4;
    s.classes = 3;
    s.max_new_per_layer = cap_new;
    s.validate();
    return s;
}

ActionString bin(std::vector<int> a) { return ActionString{ActionMode::Binary, std::move(a)}; }
ActionString four(std::vector<int> a) { return ActionString{ActionMode::FourWay, std::move(a)}; }

// Marks slots as previously trained and writes recognizable values (and the
// committed flag) into the bank rows/cells those slots own.
void age_slots(const HyperNetSpec& spec, SlotBank& bank, Provenance& prov,
               const std::vector<int>& first_task) {
    prov.first_task = first_task;
    for (int i = 0; i < spec.depth(); ++i) {
        auto& w = bank.store.at(bank_weight_name(spec, i));
        auto& b = bank.store.at(bank_bias_name(i));
        const int prev_old_span = static_cast<int>(w.dims[1]);
        for (int r = 0; r < spec.layers[i].capacity; ++r) {
            if (first_task[static_cast<std::size_t>(slot_id(spec, i, r))] == 0) continue;
            for (int c = 0; c < prev_old_span; ++c) {
                // Edges to previously trained predecessors only; layer 0 reads
                // the raw input, which every task may see.
                bool prev_trained = true;
                if (i > 0) prev_trained = first_task[static_cast<std::size_t>(
                                              slot_id(spec, i - 1, c))] != 0;
                if (!prev_trained) continue;
                const Eigen::Index at = static_cast<Eigen::Index>(c) * w.dims[0] + r;
                w.values[at] = 100.0 * (i + 1) + 10.0 * r + c;
                w.mask[static_cast<std::size_t>(at)] = 1;
            }
            b.values[r] = 0.5 + r + i;
            b.mask[static_cast<std::size_t>(r)] = 1;
        }
    }
}

struct TrainSet {
    Eigen::MatrixXd x;
    std::vector<int> labels;
};

TrainSet blob_set(int per_class, std::uint64_t seed) {
    BasePool pool = synth_blobs(3, 4, per_class, 1, 3.0, seed);
    return {pool.train_x, pool.train_y};
}

} // namespace

TEST_CASE("an all-drop layer gets its first slot switched on") {
    HyperNetSpec spec = six_slot_spec();
    Provenance prov = Provenance::create(spec);
    ActionString eff = effective_actions(spec, prov, bin({0, 0, 0, 0, 0, 0}));
    CHECK(eff.a == std::vector<int>{1, 0, 0, 1, 0, 0});

    // Four-way: the promoted slot keeps its growth vote.
    eff = effective_actions(spec, prov, four({2, 2, 2, 3, 2, 2}));
    CHECK(eff.a == std::vector<int>{0, 2, 2, 1, 2, 2});
}

TEST_CASE("over-cap requests for untrained slots demote, lowest indices kept") {
    HyperNetSpec spec = six_slot_spec(2);
    Provenance prov = Provenance::create(spec);
    ActionString eff = effective_actions(spec, prov, bin({1, 1, 1, 1, 1, 0}));
    CHECK(eff.a == std::vector<int>{1, 1, 0, 1, 1, 0});

    // Previously trained slots do not count against the cap.
    prov.first_task = {1, 0, 0, 1, 1, 0};
    eff = effective_actions(spec, prov, bin({1, 1, 1, 1, 1, 1}));
    CHECK(eff.a == std::vector<int>{1, 1, 1, 1, 1, 1});

    // Four-way demotion keeps the vote bit: use-and-extend drops to
    // drop-and-extend, only-use drops to only-drop.
    prov = Provenance::create(spec);
    spec.max_new_per_layer = 1;
    eff = effective_actions(spec, prov, four({0, 1, 1, 0, 0, 2}));
    CHECK(eff.a == std::vector<int>{0, 3, 3, 0, 2, 2});
}

TEST_CASE("candidate splits edges into frozen reused and trainable fresh parts") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    age_slots(spec, bank, prov, {1, 1, 0, 1, 0, 0});

    Rng rng(42);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 1, 1, 1, 1, 0}), 2, rng);

    CHECK(arch.used[0] == std::vector<int>{0, 1, 2});
    CHECK(arch.used[1] == std::vector<int>{0, 1});
    CHECK(arch.is_new[0] == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(arch.is_new[1] == std::vector<std::uint8_t>{0, 1});
    CHECK(arch.new_count == 2);
    CHECK(arch.reused_old == 3);

    // Independent enumeration: a compact edge trains exactly when either
    // endpoint slot is first trained by this task (layer 1 reads the input,
    // so only the row matters there).
    const auto& w1 = arch.params.at("L0/W");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            const bool expect = arch.is_new[0][static_cast<std::size_t>(r)] != 0;
            CHECK(w1.mask[static_cast<std::size_t>(c * 3 + r)] == (expect ? 1 : 0));
            if (!expect) {
                const double want = 100.0 + 10.0 * r + c;
                CHECK(w1.values[static_cast<Eigen::Index>(c) * 3 + r] == want);
            }
        }
    const auto& w2 = arch.params.at("L1/W");
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
            const bool expect = arch.is_new[1][static_cast<std::size_t>(r)] != 0 ||
                                arch.is_new[0][static_cast<std::size_t>(c)] != 0;
            CHECK(w2.mask[static_cast<std::size_t>(c * 2 + r)] == (expect ? 1 : 0));
        }
    // Reused-to-reused edge loads the bank value bit-exactly.
    CHECK(w2.values[0] == 200.0);                               // slot0 <- slot0
    CHECK(w2.values[static_cast<Eigen::Index>(1) * 2 + 0] == 201.0); // slot0 <- slot1

    const auto& b1 = arch.params.at("L0/b");
    CHECK(b1.mask == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(b1.values[0] == 0.5);
    CHECK(b1.values[1] == 1.5);

    // The private head is always fully trainable.
    CHECK(arch.params.at("head/W").all_trainable());
    CHECK(arch.params.at("head/b").all_trainable());

    CHECK(arch.actions.text() == "111110");
}

TEST_CASE("a reused slot whose predecessor pair was never co-trained starts at zero") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    // Layer-2 slot 0 trained in task 1 alongside layer-1 slot 0 only; the
    // layer-1 slot 1 edge was outside every earlier architecture.
    age_slots(spec, bank, prov, {1, 0, 0, 1, 0, 0});
    prov.first_task[1] = 2; // slot 1 of layer 1 trained later, separately
    const auto& w2bank = bank.store.at("L1/W");
    CHECK(w2bank.mask[2] == 0); // (slot0 <- slot1) never written

    Rng rng(7);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 1, 0, 1, 0, 0}), 3, rng);
    const auto& w2 = arch.params.at("L1/W");
    // Both endpoints are old, so the edge is frozen -- at the bank's stored
    // zero, exactly as every earlier task saw it.
    CHECK(w2.mask[1 * 1 + 0] == 0);
    CHECK(w2.values[static_cast<Eigen::Index>(1) * 1 + 0] == 0.0);
}

TEST_CASE("frozen coordinates are bit-identical across training") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    age_slots(spec, bank, prov, {1, 1, 0, 1, 0, 0});

    Rng rng(11);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 1, 1, 1, 1, 0}), 2, rng);
    std::map<std::string, Eigen::VectorXd> before;
    for (const auto& [name, e] : arch.params) before[name] = e.values;

    TrainSet ts = blob_set(30, 99);
    train_new(arch, ts.x, ts.labels, 4, 16, 1e-2, rng);
    REQUIRE(!arch.failed);
    CHECK(arch.trained);
    CHECK(arch.loss_curve.size() == 4);
    CHECK(arch.loss_curve.back() < arch.loss_curve.front());

    bool any_trainable_moved = false;
    for (const auto& [name, e] : arch.params) {
        const Eigen::VectorXd& b = before[name];
        for (Eigen::Index i = 0; i < e.values.size(); ++i) {
            if (e.mask[static_cast<std::size_t>(i)] == 0)
                CHECK(std::memcmp(&e.values[i], &b[i], sizeof(double)) == 0);
            else if (e.values[i] != b[i])
                any_trainable_moved = true;
        }
    }
    CHECK(any_trainable_moved);
}

TEST_CASE("zero training epochs change nothing") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    Rng rng(3);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 1, 0, 1, 0, 0}), 2, rng);
    std::map<std::string, Eigen::VectorXd> before;
    for (const auto& [name, e] : arch.params) before[name] = e.values;

    TrainSet ts = blob_set(10, 5);
    train_new(arch, ts.x, ts.labels, 0, 8, 1e-2, rng);
    CHECK(arch.trained);
    for (const auto& [name, e] : arch.params)
        CHECK(std::memcmp(e.values.data(), before[name].data(),
                          sizeof(double) * static_cast<std::size_t>(e.values.size())) == 0);
}

TEST_CASE("compact network equals the full-capacity network with dropped slots zeroed") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    age_slots(spec, bank, prov, {1, 1, 0, 1, 0, 0});

    Rng rng(21);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 0, 1, 0, 1, 1}), 2, rng);
    TrainSet ts = blob_set(20, 17);
    train_new(arch, ts.x, ts.labels, 3, 16, 1e-2, rng);
    REQUIRE(!arch.failed);

    // Full-capacity twin: every slot present, dropped slots carry all-zero
    // incoming and outgoing weights (ReLU(0) = 0 keeps them inert).
    ParamStore full;
    auto& f1 = full.add("L1/W", {3, 4});
    auto& fb1 = full.add("L1/b", {3});
    auto& f2 = full.add("L2/W", {3, 3});
    auto& fb2 = full.add("L2/b", {3});
    auto& fh = full.add("head/W", {3, 3});
    auto& fhb = full.add("head/b", {3});
    const auto& c1 = arch.params.at("L0/W");
    const auto& cb1 = arch.params.at("L0/b");
    const auto& c2 = arch.params.at("L1/W");
    const auto& cb2 = arch.params.at("L1/b");
    const auto& ch = arch.params.at("head/W");
    const auto& chb = arch.params.at("head/b");
    for (std::size_t r = 0; r < arch.used[0].size(); ++r) {
        const int slot = arch.used[0][r];
        for (int c = 0; c < 4; ++c)
            f1.matrix()(slot, c) = c1.matrix()(static_cast<Eigen::Index>(r), c);
        fb1.values[slot] = cb1.values[static_cast<Eigen::Index>(r)];
    }
    for (std::size_t r = 0; r < arch.used[1].size(); ++r) {
        const int s2 = arch.used[1][r];
        for (std::size_t c = 0; c < arch.used[0].size(); ++c)
            f2.matrix()(s2, arch.used[0][c]) =
                c2.matrix()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        fb2.values[s2] = cb2.values[static_cast<Eigen::Index>(r)];
        for (int k = 0; k < 3; ++k) fh.matrix()(k, s2) = ch.matrix()(k, static_cast<Eigen::Index>(r));
    }
    fhb.values = chb.values;

    NetLayout full_layout;
    full_layout.layers = {DenseSpec{4, 3, true, "L1/W", "L1/b"},
                          DenseSpec{3, 3, true, "L2/W", "L2/b"},
                          DenseSpec{3, 3, false, "head/W", "head/b"}};
    const Eigen::MatrixXd logits_compact = forward(arch.params, arch.layout, ts.x);
    const Eigen::MatrixXd logits_full = forward(full, full_layout, ts.x);
    CHECK((logits_compact - logits_full).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("commit then rebuild reproduces the network bit for bit") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);

    TrainSet ts = blob_set(30, 31);
    Rng r1 = Rng::stream(9, "task", 1);
    TaskArchitecture first = build_initial(spec, {2, 1}, ActionMode::Binary, r1);
    CHECK(first.actions.text() == "110100");
    CHECK(first.new_count == 3);
    CHECK(first.reused_old == 0);
    train_new(first, ts.x, ts.labels, 4, 16, 1e-2, r1);
    REQUIRE(!first.failed);
    first.valid_acc = evaluate(first, ts.x, ts.labels);
    first.test_acc = first.valid_acc;
    commit(first, spec, bank, prov);

    CHECK(prov.first_task == std::vector<int>{1, 1, 0, 1, 0, 0});
    CHECK(prov.tasks.size() == 1);

    Rng r2 = Rng::stream(9, "task", 2);
    TaskArchitecture second = build(spec, bank, prov, bin({1, 1, 1, 1, 1, 0}), 2, r2);
    train_new(second, ts.x, ts.labels, 3, 16, 1e-2, r2);
    REQUIRE(!second.failed);
    second.valid_acc = evaluate(second, ts.x, ts.labels);
    second.test_acc = second.valid_acc;
    const Eigen::MatrixXd logits_live = forward(second.params, second.layout, ts.x);
    commit(second, spec, bank, prov);
    CHECK(prov.first_task == std::vector<int>{1, 1, 2, 1, 2, 0});

    for (int t = 1; t <= 2; ++t) {
        TaskArchitecture back = rebuild_for_eval(spec, bank, prov.record(t));
        const double acc = evaluate(back, ts.x, ts.labels);
        const double stored = hex_to_double(prov.record(t).test_acc_hex);
        CHECK(std::memcmp(&acc, &stored, sizeof(double)) == 0);
    }
    const TaskArchitecture second_back = rebuild_for_eval(spec, bank, prov.record(2));
    const Eigen::MatrixXd logits_back = forward(second_back.params, second_back.layout, ts.x);
    REQUIRE(logits_back.size() == logits_live.size());
    CHECK(std::memcmp(logits_back.data(), logits_live.data(),
                      sizeof(double) * static_cast<std::size_t>(logits_live.size())) == 0);
}

TEST_CASE("committing twice or committing a failed candidate is refused") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    TrainSet ts = blob_set(10, 1);
    Rng rng(2);
    TaskArchitecture arch = build_initial(spec, {2, 1}, ActionMode::Binary, rng);
    train_new(arch, ts.x, ts.labels, 1, 8, 1e-2, rng);
    commit(arch, spec, bank, prov);
    CHECK_THROWS_AS(commit(arch, spec, bank, prov), InvariantError);

    TaskArchitecture untrained = build(spec, bank, prov, bin({1, 1, 0, 1, 0, 0}), 2, rng);
    CHECK_THROWS_AS(commit(untrained, spec, bank, prov), InvariantError);
    train_new(untrained, ts.x, ts.labels, 1, 8, 1e-2, rng);
    untrained.failed = true;
    CHECK_THROWS_AS(commit(untrained, spec, bank, prov), InvariantError);
}

TEST_CASE("parameter count is the compact edge-plus-bias total, head included") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    Rng rng(13);
    TaskArchitecture arch = build(spec, bank, prov, bin({1, 1, 1, 1, 1, 0}), 2, rng);
    // L1: 3x4+3, L2: 2x3+2, head: 3x2+3.
    CHECK(param_count(arch) == 12 + 3 + 6 + 2 + 6 + 3);
    long long total = 0;
    for (const auto& [name, e] : arch.params) total += static_cast<long long>(e.size());
    CHECK(param_count(arch) == total);
}

TEST_CASE("one seed and one action string always build the same candidate") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    age_slots(spec, bank, prov, {1, 1, 0, 1, 0, 0});

    auto build_once = [&](std::uint64_t seed) {
        Rng rng(seed);
        return build(spec, bank, prov, bin({1, 1, 1, 1, 1, 0}), 2, rng);
    };
    TaskArchitecture a = build_once(5);
    TaskArchitecture b = build_once(5);
    TaskArchitecture c = build_once(6);
    bool fresh_differs = false;
    for (const auto& [name, e] : a.params) {
        const auto& eb = b.params.at(name);
        CHECK(std::memcmp(e.values.data(), eb.values.data(),
                          sizeof(double) * static_cast<std::size_t>(e.values.size())) == 0);
        const auto& ec = c.params.at(name);
        for (Eigen::Index i = 0; i < e.values.size(); ++i) {
            if (e.mask[static_cast<std::size_t>(i)] == 0)
                CHECK(e.values[i] == ec.values[i]); // frozen part ignores the seed
            else if (e.values[i] != ec.values[i])
                fresh_differs = true;
        }
    }
    CHECK(fresh_differs);
}

TEST_CASE("kernel growth embeds old filters and opens a trainable ring once") {
    HyperNetSpec spec;
    spec.layers = {{LayerKind::Conv, 2, 2}, {LayerKind::Dense, 2, 0}};
    spec.input_channels = 1;
    spec.input_h = 4;
    spec.input_w = 4;
    spec.classes = 2;
    spec.validate();

    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    TrainSet img;
    {
        BasePool pool = synth_blobs(2, 16, 12, 1, 3.0, 77);
        Eigen::MatrixXd x = pool.train_x.cwiseAbs() / 4.0; // keep pixels tame
        img = {x, pool.train_y};
    }

    Rng r1 = Rng::stream(4, "task", 1);
    TaskArchitecture first = build_initial(spec, {2, 1}, ActionMode::FourWay, r1);
    CHECK(first.actions.text() == "0002");
    train_new(first, img.x, img.labels, 2, 8, 1e-2, r1);
    REQUIRE(!first.failed);
    first.valid_acc = first.test_acc = evaluate(first, img.x, img.labels);
    commit(first, spec, bank, prov);

    // Keep the pre-growth slices to check the embedding.
    const auto kname = bank_weight_name(spec, 0);
    const Eigen::VectorXd before = bank.store.at(kname).values;
    const auto before_dims = bank.store.at(kname).dims;
    REQUIRE(before_dims == std::vector<std::uint32_t>{2, 1, 2, 2});

    std::vector<std::string> warnings;
    REQUIRE(grow_conv_layer(spec, bank, 0, &warnings));
    CHECK(warnings.empty());
    CHECK(spec.layers[0].k == 3);
    CHECK(bank.fresh_ring[0] == 1);

    const auto& grown = bank.store.at(kname);
    REQUIRE(grown.dims == std::vector<std::uint32_t>{2, 1, 3, 3});
    for (int f = 0; f < 2; ++f) {
        // Old block bit-exact at the top-left; ring equals the scalar oracle.
        std::vector<std::vector<double>> old(2, std::vector<double>(2));
        for (int ky = 0; ky < 2; ++ky)
            for (int kx = 0; kx < 2; ++kx)
                old[static_cast<std::size_t>(ky)][static_cast<std::size_t>(kx)] =
                    before[idx4(before_dims, f, 0, ky, kx)];
        const auto want = oracle::extend_filter_ref(old);
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const double got = grown.values[idx4(grown.dims, f, 0, ky, kx)];
                if (ky < 2 && kx < 2) {
                    CHECK(std::memcmp(&got,
                                      &old[static_cast<std::size_t>(ky)]
                                          [static_cast<std::size_t>(kx)],
                                      sizeof(double)) == 0);
                    CHECK(grown.mask[static_cast<std::size_t>(idx4(grown.dims, f, 0, ky, kx))] ==
                          1);
                } else {
                    CHECK(got == doctest::Approx(want[static_cast<std::size_t>(ky)]
                                                     [static_cast<std::size_t>(kx)])
                                     .epsilon(1e-15));
                    CHECK(grown.mask[static_cast<std::size_t>(idx4(grown.dims, f, 0, ky, kx))] ==
                          0);
                }
            }
    }

    // Next task: the embedded block freezes, the fresh ring trains.
    Rng r2 = Rng::stream(4, "task", 2);
    TaskArchitecture second = build(spec, bank, prov, four({0, 2, 0, 2}), 2, r2);
    const auto& ck = second.params.at("L0/K");
    REQUIRE(ck.dims == std::vector<std::uint32_t>{1, 1, 3, 3});
    for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
            const bool ring = ky == 2 || kx == 2;
            CHECK(ck.mask[static_cast<std::size_t>(idx4(ck.dims, 0, 0, ky, kx))] ==
                  (ring ? 1 : 0));
            const double got = ck.values[idx4(ck.dims, 0, 0, ky, kx)];
            const double want = grown.values[idx4(grown.dims, 0, 0, ky, kx)];
            CHECK(std::memcmp(&got, &want, sizeof(double)) == 0);
        }
    train_new(second, img.x, img.labels, 2, 8, 1e-2, r2);
    REQUIRE(!second.failed);
    second.valid_acc = second.test_acc = evaluate(second, img.x, img.labels);
    commit(second, spec, bank, prov);
    CHECK(bank.fresh_ring[0] == 0); // the commit consumed the ring

    // After the consuming commit the ring is as frozen as the block.
    Rng r3 = Rng::stream(4, "task", 3);
    TaskArchitecture third = build(spec, bank, prov, four({0, 2, 0, 2}), 3, r3);
    const auto& ck3 = third.params.at("L0/K");
    for (std::size_t i = 0; i < ck3.mask.size(); ++i) CHECK(ck3.mask[i] == 0);

    // Task 1 still reads its exact 2x2 sub-blocks: bit-identical accuracy.
    TaskArchitecture back = rebuild_for_eval(spec, bank, prov.record(1));
    const double acc = evaluate(back, img.x, img.labels);
    const double stored = hex_to_double(prov.record(1).test_acc_hex);
    CHECK(std::memcmp(&acc, &stored, sizeof(double)) == 0);
}

TEST_CASE("growth that would starve a downstream layer is refused with a warning") {
    HyperNetSpec spec;
    spec.layers = {{LayerKind::Conv, 1, 4}, {LayerKind::Dense, 2, 0}};
    spec.input_channels = 1;
    spec.input_h = 4;
    spec.input_w = 4;
    spec.classes = 2;
    spec.validate(); // k = 4 on a 4x4 input leaves a 1x1 map

    SlotBank bank = SlotBank::create(spec);
    std::vector<std::string> warnings;
    CHECK(!grow_conv_layer(spec, bank, 0, &warnings));
    CHECK(spec.layers[0].k == 4);
    CHECK(bank.fresh_ring[0] == 0);
    REQUIRE(warnings.size() == 1);
}

TEST_CASE("rebuilding against a tampered record is rejected") {
    HyperNetSpec spec = six_slot_spec();
    SlotBank bank = SlotBank::create(spec);
    Provenance prov = Provenance::create(spec);
    TrainSet ts = blob_set(10, 3);
    Rng rng(8);
    TaskArchitecture arch = build_initial(spec, {2, 1}, ActionMode::Binary, rng);
    train_new(arch, ts.x, ts.labels, 1, 8, 1e-2, rng);
    arch.valid_acc = arch.test_acc = evaluate(arch, ts.x, ts.labels);
    commit(arch, spec, bank, prov);

    TaskRecord bad = prov.record(1);
    bad.used[1].push_back(2); // claims a last-layer slot the head never had
    CHECK_THROWS_AS(rebuild_for_eval(spec, bank, bad), InvariantError);
}
