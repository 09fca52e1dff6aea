#include "pipeline.hpp"

#include <cmath>

#include "rng.hpp"

namespace usscan {

Dataset demos_to_dataset(const Phantom& ph, std::uint64_t master_seed, int episodes,
                         TruncationMode mode, int hold_steps) {
    Dataset d;
    for (int ep = 0; ep < episodes; ++ep) {
        std::mt19937_64 rng(derive_seed(master_seed, ep));
        EpisodeTrace trace = record_demonstration(ph, rng, mode, hold_steps);
        for (size_t s = 0; s < trace.steps.size(); ++s) {
            Record r;
            r.obs = trace.steps[s].obs;
            r.action = trace.steps[s].action;
            r.label = trace.steps[s].label;
            r.episode_id = static_cast<std::uint32_t>(ep);
            r.step = static_cast<std::uint32_t>(s);
            d.records.push_back(std::move(r));
        }
    }
    return d;
}

GenSummary cmd_gen_data(const RunConfig& cfg, const std::filesystem::path& out_path) {
    TruncationMode mode = cfg.hold_mode ? TruncationMode::Hold : TruncationMode::Truncated;
    Dataset d = demos_to_dataset(cfg.phantom, cfg.master_seed, cfg.episodes, mode,
                                 cfg.hold_steps);
    write_dataset(out_path, d, cfg.arch.image_h, cfg.arch.image_w);
    GenSummary s;
    s.records = d.size();
    s.episodes = static_cast<size_t>(cfg.episodes);
    for (const Record& r : d.records) s.label1 += (r.label == 1);
    return s;
}

TrainReport cmd_train_bc(const RunConfig& cfg, const std::filesystem::path& data_path,
                         const std::filesystem::path& out_ckpt,
                         const std::filesystem::path& report_csv) {
    Dataset d = read_dataset(data_path);
    TrainConfig tc = cfg.bc;
    tc.seed = derive_seed(cfg.master_seed, seeds::kBcTrain);
    auto [train, val] = split_dataset(d, tc.split_ratio, tc.seed);

    PolicyPtr params = init_policy(cfg.arch, derive_seed(cfg.master_seed, seeds::kInit));
    TrainReport report = train_bc(*params, train, val, tc);
    write_checkpoint(out_ckpt, *params);
    if (!report_csv.empty()) write_train_report_csv(report_csv, report);
    return report;
}

TrainReport cmd_train_quality(const RunConfig& cfg,
                              const std::filesystem::path& data_path,
                              const std::filesystem::path& in_ckpt,
                              const std::filesystem::path& out_ckpt,
                              const std::filesystem::path& report_csv) {
    Dataset d = read_dataset(data_path);
    PolicyPtr params = read_checkpoint(in_ckpt, cfg.arch);
    TrainConfig tc = cfg.quality;
    tc.seed = derive_seed(cfg.master_seed, seeds::kQualityTrain);
    TrainReport report = train_quality(*params, d, tc);
    write_checkpoint(out_ckpt, *params);
    if (!report_csv.empty()) write_train_report_csv(report_csv, report);
    return report;
}

PostOptReport cmd_post_opt(const RunConfig& cfg, const std::filesystem::path& in_ckpt,
                           const std::filesystem::path& out_ckpt,
                           const std::filesystem::path& report_csv) {
    PolicyPtr params = read_checkpoint(in_ckpt, cfg.arch);
    if (!params->quality_trained)
        throw ConfigMismatch("post-opt: checkpoint's quality head is untrained; "
                             "run train-quality first");
    PostOptReport report = post_optimize(*params, cfg.phantom, cfg.guidance,
                                         derive_seed(cfg.master_seed, seeds::kPostOpt));
    write_checkpoint(out_ckpt, *params);
    if (!report_csv.empty()) write_postopt_report_csv(report_csv, report);
    return report;
}

RolloutSummary cmd_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                        int n_episodes, const std::filesystem::path& out_csv,
                        bool use_oracle) {
    PolicyPtr params = read_checkpoint(ckpt, cfg.arch);
    if (n_episodes <= 0) n_episodes = cfg.eval_episodes;
    EvalResult result = rollout_eval(*params, cfg.phantom, n_episodes,
                                     cfg.eval_max_steps,
                                     derive_seed(cfg.master_seed, seeds::kEval),
                                     cfg.guidance, use_oracle);
    if (!out_csv.empty()) write_eval_csv(out_csv, result);
    return result.summary;
}

// ---- gradient checking harness ----

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = uniform(rng, -scale, scale);
    return t;
}

GradCheckEntry check_network(const std::string& name, Network& net, const Tensor& input,
                             const Tensor& target, bool inject_fault, double tol) {
    auto params = net.params();
    auto grads = net.grads();
    auto fb = [&]() {
        net.zero_grads();
        Tensor y = net.forward(input);
        LossResult lr = mse_loss(y, target);
        if (inject_fault)
            for (double& g : lr.grad.data) g = -g;
        net.backward(lr.grad);
        return lr.loss;
    };
    GradCheckEntry e;
    e.name = name;
    e.max_rel_err = grad_check(params, grads, fb);
    e.pass = e.max_rel_err < tol;
    return e;
}

}  // namespace

std::vector<GradCheckEntry> cmd_gradcheck(bool inject_fault) {
    std::vector<GradCheckEntry> out;
    std::mt19937_64 rng(12345);
    const double tol = 1e-4;

    {
        Network net;
        net.add(std::make_unique<Dense>(5, 4, rng));
        out.push_back(check_network("dense", net, random_tensor({5}, rng),
                                    random_tensor({4}, rng), inject_fault, 1e-9));
    }
    {
        Network net;
        net.add(std::make_unique<Conv2d>(2, 3, 3, 1, rng));
        out.push_back(check_network("conv2d", net, random_tensor({2, 5, 5}, rng),
                                    random_tensor({3, 3, 3}, rng), false, tol));
    }
    {
        Network net;
        net.add(std::make_unique<Dense>(6, 6, rng));
        net.add(std::make_unique<Relu>());
        net.add(std::make_unique<Dense>(6, 3, rng));
        out.push_back(check_network("relu", net, random_tensor({6}, rng),
                                    random_tensor({3}, rng), false, tol));
    }
    {
        Network net;
        net.add(std::make_unique<Conv2d>(1, 2, 2, 1, rng));
        net.add(std::make_unique<Flatten>());
        net.add(std::make_unique<Dense>(2 * 3 * 3, 4, rng));
        out.push_back(check_network("flatten", net, random_tensor({1, 4, 4}, rng),
                                    random_tensor({4}, rng), false, tol));
    }
    {
        Network net;
        net.add(std::make_unique<Dense>(4, 4, rng));
        net.add(std::make_unique<Softmax>());
        out.push_back(check_network("softmax", net, random_tensor({4}, rng),
                                    random_tensor({4}, rng), false, tol));
    }

    // Full policy composites on a reduced architecture.
    ArchConfig small;
    small.image_h = small.image_w = 12;
    small.conv1_ch = 2;
    small.conv2_ch = 3;
    small.feature_dim = 4;
    small.encoder_hidden = 4;
    small.action_hidden = 6;
    small.quality_hidden = 6;

    Phantom ph;
    ph.image_height = ph.image_width = 12;
    ProbeFrame frame;
    frame.position = {0.012, -0.008, -0.004};
    frame.orientation = Quaternion::from_axis_angle({1.0, 0.5, 0.0}, 0.05);
    Observation obs = observe(ph, frame);

    {
        PolicyPtr p = init_policy(small, 7);
        std::vector<ParamGroup> groups = p->groups();
        std::vector<Tensor*> params, grads;
        for (ParamGroup& g : groups) {
            if (g.name != "front" && g.name != "action_head") continue;
            for (Tensor* t : g.tensors) params.push_back(t);
            for (Tensor* t : g.grads) grads.push_back(t);
        }
        Tensor target = random_tensor({7}, rng);
        auto fb = [&]() {
            p->zero_grads();
            Tensor y = p->action_forward(obs);
            LossResult lr = mse_loss(y, target);
            p->action_backward(lr.grad);
            return lr.loss;
        };
        GradCheckEntry e;
        e.name = "policy_action_mse";
        e.max_rel_err = grad_check(params, grads, fb);
        e.pass = e.max_rel_err < tol;
        out.push_back(e);
    }
    {
        PolicyPtr p = init_policy(small, 8);
        std::vector<ParamGroup> groups = p->groups();
        std::vector<Tensor*> params, grads;
        for (ParamGroup& g : groups) {
            if (g.name != "front" && g.name != "quality_head") continue;
            for (Tensor* t : g.tensors) params.push_back(t);
            for (Tensor* t : g.grads) grads.push_back(t);
        }
        auto fb = [&]() {
            p->zero_grads();
            Tensor logits = p->quality_logits(obs);
            LossResult lr = cross_entropy(logits, 1);
            p->quality_backward(lr.grad);
            return lr.loss;
        };
        GradCheckEntry e;
        e.name = "policy_quality_ce";
        e.max_rel_err = grad_check(params, grads, fb);
        e.pass = e.max_rel_err < tol;
        out.push_back(e);
    }
    return out;
}

}  // namespace usscan
