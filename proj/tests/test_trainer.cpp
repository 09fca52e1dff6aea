#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "pipeline.hpp"
#include "rng.hpp"
#include "trainer.hpp"

using namespace usscan;

namespace {

// Singleton-episode dataset: split sizes must hit the floor exactly.
Dataset flat_dataset(size_t n) {
    Dataset d;
    d.records.resize(n);
    for (size_t i = 0; i < n; ++i) {
        d.records[i].episode_id = static_cast<std::uint32_t>(i);
        d.records[i].step = 0;
        d.records[i].label = static_cast<int>(i % 2);
    }
    return d;
}

ArchConfig small_arch() {
    ArchConfig cfg;
    cfg.image_h = cfg.image_w = 16;
    return cfg;
}

Phantom small_phantom() {
    Phantom ph;
    ph.image_height = ph.image_width = 16;
    return ph;
}

std::vector<double> group_bytes(PolicyParams& p, const std::string& name) {
    std::vector<double> out;
    for (ParamGroup& g : p.groups())
        if (g.name == name)
            for (Tensor* t : g.tensors)
                out.insert(out.end(), t->data.begin(), t->data.end());
    return out;
}

std::set<std::uint32_t> episode_ids(const Dataset& d) {
    std::set<std::uint32_t> ids;
    for (const Record& r : d.records) ids.insert(r.episode_id);
    return ids;
}

}  // namespace

TEST_CASE("split_dataset hits floor(ratio * N) on singleton episodes") {
    Dataset d10 = flat_dataset(10);
    auto [t10, v10] = split_dataset(d10, 0.8, 1);
    CHECK(t10.size() == 8);
    CHECK(v10.size() == 2);

    // The paper-scale count: floor(0.8 * 21221) = 16976.
    Dataset big = flat_dataset(21221);
    auto [tb, vb] = split_dataset(big, 0.8, 2);
    CHECK(tb.size() == 16976);
    CHECK(vb.size() == 4245);
}

TEST_CASE("split_dataset is a disjoint, exhaustive, episode-aware partition") {
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 5, 20, TruncationMode::Truncated, 10);
    auto [train, val] = split_dataset(d, 0.8, 7);
    CHECK(train.size() + val.size() == d.size());

    std::set<std::uint32_t> ti = episode_ids(train);
    std::set<std::uint32_t> vi = episode_ids(val);
    for (std::uint32_t id : ti) CHECK(vi.count(id) == 0);
    CHECK(ti.size() + vi.size() == episode_ids(d).size());
}

TEST_CASE("split_dataset determinism and seed sensitivity") {
    Dataset d = flat_dataset(100);
    auto [a1, b1] = split_dataset(d, 0.8, 11);
    auto [a2, b2] = split_dataset(d, 0.8, 11);
    auto same = [](const Dataset& x, const Dataset& y) {
        if (x.size() != y.size()) return false;
        for (size_t i = 0; i < x.size(); ++i)
            if (x.records[i].episode_id != y.records[i].episode_id) return false;
        return true;
    };
    CHECK(same(a1, a2));
    CHECK(same(b1, b2));

    auto [a3, b3] = split_dataset(d, 0.8, 12);
    CHECK(a3.size() == a1.size());
    CHECK(!same(a1, a3));
}

TEST_CASE("split_dataset rejects degenerate inputs") {
    Dataset one = flat_dataset(1);
    CHECK_THROWS_AS(split_dataset(one, 0.8, 0), EmptyDataset);
}

TEST_CASE("drop_terminal_records drops only episode-final goal records") {
    Dataset d;
    auto add = [&](std::uint32_t ep, std::uint32_t step, int label) {
        Record r;
        r.episode_id = ep;
        r.step = step;
        r.label = label;
        d.records.push_back(r);
    };
    add(0, 0, 0);
    add(0, 1, 0);
    add(0, 2, 1);  // goal terminal: dropped
    add(1, 0, 0);
    add(1, 1, 0);  // non-goal terminal: kept
    add(2, 0, 1);  // mid-episode goal record: kept
    add(2, 1, 1);  // goal terminal: dropped
    Dataset out = drop_terminal_records(d);
    REQUIRE(out.size() == 5);
    for (const Record& r : out.records)
        CHECK(!(r.label == 1 && ((r.episode_id == 0 && r.step == 2) ||
                                 (r.episode_id == 2 && r.step == 1))));

    // A lone non-goal record survives (single-record overfit contract).
    Dataset lone;
    add(3, 0, 0);
    lone.records.push_back(d.records.back());
    CHECK(drop_terminal_records(lone).size() == 1);
}

TEST_CASE("train_bc overfits a single-record dataset") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 4);
    Phantom ph = small_phantom();
    std::mt19937_64 rng(2);
    Record r;
    r.obs = observe(ph, sample_start(ph, rng));
    r.action.dp = {0.002, -0.001, 0.0};
    r.action.dq = {0.01, 0.0, -0.02, 0.0};
    Dataset d;
    d.records.push_back(r);

    TrainConfig tc;
    tc.epochs = 2000;
    tc.batch_size = 1;
    tc.seed = 1;
    TrainReport report = train_bc(*p, d, d, tc);
    CHECK(report.train_loss.back() < 1e-3);
}

TEST_CASE("sgd with zero learning rate leaves parameters bit-identical") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 14);
    std::vector<double> before;
    for (Tensor* t : p->all_tensors())
        before.insert(before.end(), t->data.begin(), t->data.end());

    std::vector<ParamGroup> groups = p->groups();
    for (ParamGroup& g : groups)
        for (Tensor* t : g.grads)
            for (double& v : t->data) v = 1.0;
    sgd_step(groups, 0.0);

    std::vector<double> after;
    for (Tensor* t : p->all_tensors())
        after.insert(after.end(), t->data.begin(), t->data.end());
    CHECK(before == after);
}

TEST_CASE("train_bc touches only front and action_head") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 6);
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 8, 6, TruncationMode::Truncated, 10);
    auto [train, val] = split_dataset(d, 0.8, 3);

    std::vector<double> quality_before = group_bytes(*p, "quality_head");
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 5;
    train_bc(*p, train, val, tc);
    CHECK(group_bytes(*p, "quality_head") == quality_before);
    CHECK(p->bc_trained);
}

TEST_CASE("train_bc loss decreases over the first five epochs") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 7);
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 42, 20, TruncationMode::Truncated, 10);
    auto [train, val] = split_dataset(d, 0.8, 9);

    TrainConfig tc;
    tc.epochs = 5;
    tc.seed = 9;
    TrainReport report = train_bc(*p, train, val, tc);
    REQUIRE(report.train_loss.size() == 6);
    for (size_t i = 1; i < report.train_loss.size(); ++i)
        CHECK(report.train_loss[i] < report.train_loss[i - 1]);
}

TEST_CASE("validation loss evaluation is side-effect free") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 10);
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 15, 6, TruncationMode::Truncated, 10);
    fit_norm_stats(*p, d, drop_terminal_records(d));
    double a = eval_action_loss(*p, d);
    double b = eval_action_loss(*p, d);
    CHECK(a == b);
}

TEST_CASE("train pipeline is bit-reproducible per seed") {
    auto run = [] {
        ArchConfig cfg = small_arch();
        PolicyPtr p = init_policy(cfg, 11);
        Phantom ph = small_phantom();
        Dataset d = demos_to_dataset(ph, 23, 10, TruncationMode::Truncated, 10);
        auto [train, val] = split_dataset(d, 0.8, 4);
        TrainConfig tc;
        tc.epochs = 3;
        tc.seed = 13;
        TrainReport r = train_bc(*p, train, val, tc);
        TrainConfig qc;
        qc.epochs = 5;
        qc.seed = 14;
        TrainReport q = train_quality(*p, d, qc);
        return std::pair{r.final_checksum, q.final_checksum};
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("train_quality freezes front and action head bit-identically") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 12);
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 19, 10, TruncationMode::Truncated, 10);

    std::vector<double> front_before = group_bytes(*p, "front");
    std::vector<double> action_before = group_bytes(*p, "action_head");
    TrainConfig tc;
    tc.epochs = 10;
    tc.seed = 15;
    TrainReport report = train_quality(*p, d, tc);
    CHECK(group_bytes(*p, "front") == front_before);
    CHECK(group_bytes(*p, "action_head") == action_before);
    CHECK(p->quality_trained);
    for (double acc : report.val_acc) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
}

TEST_CASE("train_quality separates held-out classes by confidence") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 16);
    Phantom ph = small_phantom();
    Dataset d = demos_to_dataset(ph, 33, 40, TruncationMode::Truncated, 10);
    auto [fit, held] = split_dataset(d, 0.8, 21);

    TrainConfig tc;
    tc.epochs = 60;
    tc.seed = 22;
    train_quality(*p, fit, tc);

    double q1 = 0, q0 = 0;
    int n1 = 0, n0 = 0;
    for (const Record& r : held.records) {
        double q = p->quality(r.obs);
        if (r.label == 1) {
            q1 += q;
            ++n1;
        } else {
            q0 += q;
            ++n0;
        }
    }
    REQUIRE(n1 > 0);
    REQUIRE(n0 > 0);
    CHECK(q1 / n1 > q0 / n0);
}

TEST_CASE("train_quality rejects single-class datasets") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 18);
    Dataset d = flat_dataset(20);
    for (Record& r : d.records) r.label = 0;
    TrainConfig tc;
    CHECK_THROWS_AS(train_quality(*p, d, tc), SingleClassDataset);
}

TEST_CASE("class weighting flag runs on imbalanced data, both recorded") {
    Phantom ph = small_phantom();
    // The demonstration corpus is naturally imbalanced (one goal record per
    // episode), standing in for the paper's 4055:17166 class ratio.
    Dataset d = demos_to_dataset(ph, 51, 30, TruncationMode::Truncated, 10);

    ArchConfig cfg = small_arch();
    TrainConfig tc;
    tc.epochs = 30;
    tc.seed = 25;

    PolicyPtr plain = init_policy(cfg, 20);
    TrainReport unweighted = train_quality(*plain, d, tc);

    tc.class_weighted = true;
    PolicyPtr weighted = init_policy(cfg, 20);
    TrainReport rw = train_quality(*weighted, d, tc);

    REQUIRE(unweighted.val_acc.size() == rw.val_acc.size());
    CHECK(unweighted.val_acc.back() >= 0.0);
    CHECK(rw.val_acc.back() >= 0.0);
    CHECK(unweighted.final_checksum != rw.final_checksum);
}

TEST_CASE("TrainConfig validation") {
    TrainConfig tc;
    tc.alpha = 0.0;
    CHECK_THROWS_AS(tc.validate(), InvalidConfig);
    tc = TrainConfig{};
    tc.split_ratio = 1.0;
    CHECK_THROWS_AS(tc.validate(), InvalidConfig);
}
