#include "guided.hpp"

#include <cmath>

#include "rng.hpp"

namespace usscan {

double reward(PolicyParams& params, const Phantom& ph, const SimState& state,
              const Action& a) {
    double q_now = params.quality(observe(ph, state.frame));
    auto [next, obs_next] = step(ph, state, a);
    double q_next = params.quality(obs_next);
    return q_next - q_now;
}

SelectedAction select_target_action(PolicyParams& params, const Phantom& ph,
                                    const SimState& state, const Action& guide_action) {
    Action model_action = params.predict_action(observe(ph, state.frame));
    SelectedAction sel;
    sel.reward_model = reward(params, ph, state, model_action);
    sel.reward_guide = reward(params, ph, state, guide_action);
    if (sel.reward_guide > sel.reward_model + 1e-12) {
        sel.action = guide_action;
        sel.from_guide = true;
    } else {
        sel.action = model_action;
    }
    return sel;
}

namespace {

Tensor standardized_action(const NormStats& norm, const Action& a) {
    Tensor t({7});
    const double raw[7] = {a.dp[0], a.dp[1], a.dp[2], a.dq[0], a.dq[1], a.dq[2], a.dq[3]};
    for (int i = 0; i < 7; ++i)
        t.data[i] = (raw[i] - norm.action_mean.data[i]) / norm.action_std.data[i];
    return t;
}

}  // namespace

PostOptReport post_optimize(PolicyParams& params, const Phantom& ph,
                            const GuidanceConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!params.bc_trained)
        throw InvalidConfig("post_optimize: policy is not behavior-cloned yet");
    if (!params.quality_trained)
        throw InvalidConfig("post_optimize: quality head is untrained");

    std::vector<ParamGroup> groups = params.groups();
    for (ParamGroup& g : groups)
        g.trainable = (g.name == "front" || g.name == "action_head");
    Optimizer opt(cfg.optimizer, cfg.alpha);

    AggregationBuffer buffer;
    buffer.capacity = cfg.buffer_capacity;
    PostOptReport report;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Collection phase: on-policy rollouts with guide relabeling.
        for (int r = 0; r < cfg.rollouts_per_epoch; ++r) {
            std::mt19937_64 rng(derive_seed(
                seed, static_cast<std::uint64_t>(epoch) * cfg.rollouts_per_epoch + r));
            SimState state{sample_start(ph, rng), 0};
            for (int t = 0; t < cfg.max_steps; ++t) {
                Observation obs = observe(ph, state.frame);
                Action model_action = params.predict_action(obs);
                double r_model = reward(params, ph, state, model_action);
                if (r_model < cfg.reward_threshold) {
                    Action guide_action = oracle_policy(ph, state);
                    double r_guide = reward(params, ph, state, guide_action);
                    ++report.guided_steps;
                    AggregationBuffer::Entry e;
                    e.obs = obs;
                    e.reward_model = r_model;
                    if (r_guide > r_model + 1e-12) {
                        e.action = guide_action;
                        e.reward_selected = r_guide;
                        ++report.guide_chosen;
                    } else {
                        e.action = model_action;
                        e.reward_selected = r_model;
                    }
                    buffer.push(std::move(e));
                }
                auto [next, _] = step(ph, state, model_action);
                state = next;
            }
        }
        report.buffer_size.push_back(buffer.entries.size());

        // Training phase: one pass over a deterministic sample of the buffer.
        if (buffer.entries.empty()) {
            report.buffer_loss.push_back(0.0);
            continue;
        }
        std::mt19937_64 trng(derive_seed(seed ^ 0x7a91be5cULL, epoch));
        std::vector<size_t> idx(buffer.entries.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle_indices(idx, trng);
        size_t take = std::min(idx.size(), static_cast<size_t>(cfg.train_samples_per_epoch));
        idx.resize(take);

        double epoch_loss = 0.0;
        for (size_t b = 0; b < take; b += cfg.batch_size) {
            size_t e = std::min(take, b + static_cast<size_t>(cfg.batch_size));
            params.zero_grads();
            for (size_t i = b; i < e; ++i) {
                const AggregationBuffer::Entry& en = buffer.entries[idx[i]];
                Tensor pred = params.action_forward(en.obs);
                Tensor target = standardized_action(params.norm(), en.action);
                LossResult lr = mse_loss(pred, target);
                epoch_loss += lr.loss;
                params.action_backward(lr.grad);
            }
            opt.step(groups);
        }
        epoch_loss /= static_cast<double>(take);
        if (!std::isfinite(epoch_loss))
            throw DivergenceDetected("post_optimize: non-finite buffer loss");
        report.buffer_loss.push_back(epoch_loss);
    }
    return report;
}

EvalResult rollout_eval(PolicyParams& params, const Phantom& ph, int n_episodes,
                        int max_steps, std::uint64_t seed,
                        const GuidanceConfig& cfg, bool use_oracle) {
    EvalResult result;
    int successes = 0, overshoots = 0;
    double offset_sum = 0.0;

    for (int ep = 0; ep < n_episodes; ++ep) {
        std::mt19937_64 rng(derive_seed(seed, ep));
        SimState state{sample_start(ph, rng), 0};
        EpisodeTrace trace;
        bool seen_high = false;
        bool overshoot = false;

        for (int t = 0; t < max_steps; ++t) {
            Observation obs = observe(ph, state.frame);
            double q = params.quality(obs);
            int label = ground_truth_label(ph, state.frame);
            Action a = use_oracle ? oracle_policy(ph, state) : params.predict_action(obs);
            trace.steps.push_back({obs, a, q, label});
            if (q > cfg.q_high) seen_high = true;
            if (seen_high && q < cfg.q_low) overshoot = true;
            auto [next, _] = step(ph, state, a);
            state = next;
        }

        bool success = trace.steps.size() >= static_cast<size_t>(cfg.success_window);
        if (success) {
            for (size_t i = trace.steps.size() - cfg.success_window;
                 i < trace.steps.size(); ++i) {
                const TraceStep& s = trace.steps[i];
                if (s.label != 1 || s.confidence < cfg.q_high) {
                    success = false;
                    break;
                }
            }
        }

        double ox = state.frame.position[0] - ph.target_center[0];
        double oy = state.frame.position[1] - ph.target_center[1];
        trace.final_lateral_offset = std::hypot(ox, oy);
        trace.success = success;
        trace.overshoot = overshoot;

        successes += success;
        overshoots += overshoot;
        offset_sum += trace.final_lateral_offset;
        result.traces.push_back(std::move(trace));
    }

    result.summary.episodes = n_episodes;
    if (n_episodes > 0) {
        result.summary.success_rate = static_cast<double>(successes) / n_episodes;
        result.summary.overshoot_rate = static_cast<double>(overshoots) / n_episodes;
        result.summary.mean_terminal_offset = offset_sum / n_episodes;
    }
    return result;
}

}  // namespace usscan
