#pragma once

#include <deque>

#include "trainer.hpp"

namespace usscan {

struct GuidanceConfig {
    double reward_threshold = 0.0;  // guide consulted when model reward < this
    int epochs = 200;
    int rollouts_per_epoch = 3;
    int max_steps = 60;
    double alpha = 0.001;
    int batch_size = 32;
    size_t buffer_capacity = 4000;
    int train_samples_per_epoch = 512;
    OptKind optimizer = OptKind::Sgd;

    // success / overshoot predicate
    int success_window = 10;
    double q_high = 0.8;
    double q_low = 0.2;

    void validate() const {
        if (epochs < 1 || max_steps < 1 || rollouts_per_epoch < 1)
            throw InvalidConfig("GuidanceConfig: epochs/max_steps/rollouts must be >= 1");
        if (alpha <= 0.0 || batch_size <= 0 || buffer_capacity == 0)
            throw InvalidConfig("GuidanceConfig: bad alpha/batch/buffer");
    }
};

// FIFO store of relabeled (observation, target action) pairs.
struct AggregationBuffer {
    struct Entry {
        Observation obs;
        Action action;
        double reward_model;     // model action reward at insertion time
        double reward_selected;  // reward of the stored action
    };
    std::deque<Entry> entries;
    size_t capacity = 4000;

    void push(Entry e) {
        if (entries.size() == capacity) entries.pop_front();
        entries.push_back(std::move(e));
    }
};

// f_r(s, a) = q(next state under a) - q(s). The transition is queried
// hypothetically; the live rollout state is never advanced.
double reward(PolicyParams& params, const Phantom& ph, const SimState& state,
              const Action& a);

struct SelectedAction {
    Action action;
    bool from_guide = false;
    double reward_model = 0.0;
    double reward_guide = 0.0;
};

// Two-candidate argmax between the model's own action and the guide's.
// Ties (|delta| <= 1e-12) keep the model's action.
SelectedAction select_target_action(PolicyParams& params, const Phantom& ph,
                                    const SimState& state, const Action& guide_action);

struct PostOptReport {
    std::vector<double> buffer_loss;   // per-epoch mean loss over trained samples
    std::vector<size_t> buffer_size;   // per-epoch buffer size after rollouts
    size_t guided_steps = 0;           // total steps where the guide was consulted
    size_t guide_chosen = 0;           // of those, how often the guide's action won
};

// Guided post-optimization: roll out the policy, relabel low-reward steps
// via the two-candidate argmax, and fine-tune front + action_head on the
// aggregation buffer. The quality head stays frozen throughout.
PostOptReport post_optimize(PolicyParams& params, const Phantom& ph,
                            const GuidanceConfig& cfg, std::uint64_t seed);

struct RolloutSummary {
    double success_rate = 0.0;
    double overshoot_rate = 0.0;
    double mean_terminal_offset = 0.0;
    int episodes = 0;
};

struct EvalResult {
    std::vector<EpisodeTrace> traces;
    RolloutSummary summary;
};

// Unguided evaluation rollouts. Success: ground-truth label 1 with
// q >= q_high over the final `success_window` steps. Overshoot: q crossed
// q_high and later fell below q_low. With `use_oracle` the scripted expert
// drives the probe while q is still read from the policy's quality head.
EvalResult rollout_eval(PolicyParams& params, const Phantom& ph, int n_episodes,
                        int max_steps, std::uint64_t seed,
                        const GuidanceConfig& cfg = {}, bool use_oracle = false);

}  // namespace usscan
