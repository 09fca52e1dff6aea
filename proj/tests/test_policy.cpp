#include <doctest.h>

#include <cmath>
#include <random>

#include "pipeline.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "trainer.hpp"

using namespace usscan;

namespace {

ArchConfig small_arch() {
    ArchConfig cfg;
    cfg.image_h = cfg.image_w = 16;
    return cfg;
}

Observation random_obs(const ArchConfig& cfg, std::mt19937_64& rng) {
    Observation obs;
    obs.image.height = cfg.image_h;
    obs.image.width = cfg.image_w;
    obs.image.pixels.resize(static_cast<size_t>(cfg.image_h) * cfg.image_w);
    for (double& p : obs.image.pixels) p = uniform(rng, 0.0, 1.0);
    for (double& v : obs.position) v = uniform(rng, -0.1, 0.1);
    obs.orientation = quat_normalize({uniform(rng, 0.5, 1.0), uniform(rng, -0.3, 0.3),
                                      uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3)});
    for (double& v : obs.wrench.force) v = uniform(rng, -2.0, 2.0);
    for (double& v : obs.wrench.torque) v = uniform(rng, -0.1, 0.1);
    return obs;
}

std::vector<double> flat_params(PolicyParams& p) {
    std::vector<double> out;
    for (Tensor* t : p.all_tensors())
        out.insert(out.end(), t->data.begin(), t->data.end());
    return out;
}

}  // namespace

TEST_CASE("init_policy is deterministic per seed") {
    ArchConfig cfg = small_arch();
    PolicyPtr a = init_policy(cfg, 0);
    PolicyPtr b = init_policy(cfg, 0);
    CHECK(flat_params(*a) == flat_params(*b));
    PolicyPtr c = init_policy(cfg, 1);
    CHECK(flat_params(*a) != flat_params(*c));
    CHECK(a->param_count() == c->param_count());
}

TEST_CASE("concatenated feature width is three times feature_dim") {
    ArchConfig paper;
    paper.feature_dim = 128;
    CHECK(paper.concat_width() == 384);
    ArchConfig desk;
    desk.feature_dim = 32;
    CHECK(desk.concat_width() == 96);

    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 3);
    std::mt19937_64 rng(9);
    Tensor f = p->encode(random_obs(cfg, rng));
    CHECK(static_cast<int>(f.size()) == 3 * cfg.feature_dim);
}

TEST_CASE("invalid architecture is rejected") {
    ArchConfig cfg = small_arch();
    cfg.feature_dim = 0;
    CHECK_THROWS_AS(init_policy(cfg, 0), InvalidConfig);
}

TEST_CASE("position-blindness: perturbing position leaves outputs bit-identical") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 17);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Observation a = random_obs(cfg, rng);
        Observation b = a;
        b.position = {a.position[0] + 1.5, a.position[1] - 2.0, a.position[2] + 0.3};

        CHECK(p->encode(a).data == p->encode(b).data);
        CHECK(p->action_forward(a).data == p->action_forward(b).data);
        CHECK(p->quality(a) == p->quality(b));
        Action pa = p->predict_action(a);
        Action pb = p->predict_action(b);
        CHECK(pa.dp == pb.dp);
        CHECK(pa.dq == pb.dq);
    }
}

TEST_CASE("golden feature regression on the all-zero observation") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 1234);
    Observation obs;
    obs.image.height = obs.image.width = 16;
    obs.image.pixels.assign(256, 0.0);
    // zero image, identity orientation, zero wrench
    Tensor f = p->encode(obs);
    REQUIRE(f.size() == 96);

    // Pinned on first run: the zero image and zero wrench produce zero
    // features through zero-bias relu stacks, so only the pose segment
    // (indices 32..63, fed the identity quaternion) is active.
    double sum = 0;
    int nonzero = 0;
    for (size_t i = 0; i < f.size(); ++i) {
        sum += f.data[i];
        if (f.data[i] != 0.0) {
            ++nonzero;
            CHECK(i >= 32);
            CHECK(i <= 63);
        }
    }
    CHECK(nonzero == 32);
    CHECK(sum == doctest::Approx(-0.36929197792630497).epsilon(1e-14));
    CHECK(f.data[32] == doctest::Approx(0.11767975772936766).epsilon(1e-14));
    CHECK(f.data[63] == doctest::Approx(0.020532531596448172).epsilon(1e-14));
}

TEST_CASE("predict_action overfits a single training pair") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 5);
    std::mt19937_64 rng(6);
    Record r;
    r.obs = random_obs(cfg, rng);
    r.action.dp = {0.004, -0.002, 0.001};
    r.action.dq = {0.01, -0.03, 0.02, 0.005};
    r.label = 0;
    Dataset d;
    d.records.push_back(r);

    TrainConfig tc;
    tc.epochs = 2000;
    tc.batch_size = 1;
    tc.seed = 77;
    TrainReport report = train_bc(*p, d, d, tc);
    CHECK(report.train_loss.back() < 1e-3);

    Action pred = p->predict_action(r.obs);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(pred.dp[i] - r.action.dp[i]) <= 1e-3);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(pred.dq[i] - r.action.dq[i]) <= 1e-3);
}

TEST_CASE("predict_action is deterministic") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 8);
    std::mt19937_64 rng(13);
    Observation obs = random_obs(cfg, rng);
    Action a = p->predict_action(obs);
    Action b = p->predict_action(obs);
    CHECK(a.dp == b.dp);
    CHECK(a.dq == b.dq);
}

TEST_CASE("quality is a probability and the class distribution sums to one") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 19);
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 20; ++trial) {
        Observation obs = random_obs(cfg, rng);
        double q = p->quality(obs);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);

        Tensor logits = p->quality_logits(obs);
        REQUIRE(logits.size() == 2);
        double m = std::max(logits.data[0], logits.data[1]);
        double e0 = std::exp(logits.data[0] - m);
        double e1 = std::exp(logits.data[1] - m);
        double p0 = e0 / (e0 + e1);
        double p1 = e1 / (e0 + e1);
        CHECK(std::abs(p0 + p1 - 1.0) <= 1e-12);
        CHECK(q == doctest::Approx(p1).epsilon(1e-12));
    }
}

TEST_CASE("clone_policy copies every tensor and flag") {
    ArchConfig cfg = small_arch();
    PolicyPtr p = init_policy(cfg, 23);
    p->bc_trained = true;
    PolicyPtr c = clone_policy(*p);
    CHECK(flat_params(*p) == flat_params(*c));
    CHECK(c->bc_trained);
    CHECK(!c->quality_trained);
}

TEST_CASE("full policy composites pass gradient checking") {
    // Covers every layer kind once plus both head composites.
    std::vector<GradCheckEntry> entries = cmd_gradcheck(false);
    REQUIRE(!entries.empty());
    bool saw_action = false, saw_quality = false;
    for (const GradCheckEntry& e : entries) {
        CHECK(e.pass);
        CHECK(e.max_rel_err < 1e-4);
        saw_action |= e.name == "policy_action_mse";
        saw_quality |= e.name == "policy_quality_ce";
    }
    CHECK(saw_action);
    CHECK(saw_quality);
}

TEST_CASE("injected gradient fault is caught") {
    std::vector<GradCheckEntry> entries = cmd_gradcheck(true);
    bool any_fail = false;
    for (const GradCheckEntry& e : entries) any_fail |= !e.pass;
    CHECK(any_fail);
}
