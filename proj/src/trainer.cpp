#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rng.hpp"

namespace usscan {

namespace {

Tensor standardized_action(const NormStats& norm, const Action& a) {
    Tensor t({7});
    const double raw[7] = {a.dp[0], a.dp[1], a.dp[2], a.dq[0], a.dq[1], a.dq[2], a.dq[3]};
    for (int i = 0; i < 7; ++i)
        t.data[i] = (raw[i] - norm.action_mean.data[i]) / norm.action_std.data[i];
    return t;
}

void set_trainable(std::vector<ParamGroup>& groups,
                   std::initializer_list<const char*> names) {
    for (ParamGroup& g : groups) {
        g.trainable = false;
        for (const char* n : names)
            if (g.name == n) g.trainable = true;
    }
}

}  // namespace

std::uint64_t params_checksum(PolicyParams& params) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    for (Tensor* t : params.all_tensors()) {
        const unsigned char* bytes =
            reinterpret_cast<const unsigned char*>(t->data.data());
        size_t n = t->data.size() * sizeof(double);
        for (size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio,
                                          std::uint64_t seed) {
    if (d.size() < 2) throw EmptyDataset("split_dataset: need at least 2 records");

    std::map<std::uint32_t, std::vector<size_t>> episodes;
    for (size_t i = 0; i < d.size(); ++i)
        episodes[d.records[i].episode_id].push_back(i);

    std::vector<std::uint32_t> order;
    for (auto& [id, _] : episodes) order.push_back(id);
    std::mt19937_64 rng(seed);
    shuffle_indices(order, rng);

    size_t target = static_cast<size_t>(std::floor(ratio * static_cast<double>(d.size())));
    Dataset train, val;
    size_t count = 0;
    size_t cut = order.size();
    for (size_t e = 0; e < order.size(); ++e) {
        size_t s = episodes[order[e]].size();
        if (count >= target) {
            cut = e;
            break;
        }
        if (count + s > target) {
            // boundary episode: include it only if that lands closer to target
            size_t over = count + s - target;
            size_t under = target - count;
            cut = (over < under) ? e + 1 : e;
            if (over < under) count += s;
            break;
        }
        count += s;
        cut = e + 1;
    }
    for (size_t e = 0; e < order.size(); ++e) {
        Dataset& side = (e < cut) ? train : val;
        for (size_t i : episodes[order[e]])
            side.records.push_back(d.records[i]);
    }
    if (train.records.empty() || val.records.empty())
        throw EmptyDataset("split_dataset: one side of the split is empty");
    return {std::move(train), std::move(val)};
}

Dataset drop_terminal_records(const Dataset& d) {
    std::map<std::uint32_t, std::uint32_t> last;
    for (const Record& r : d.records) {
        auto it = last.find(r.episode_id);
        if (it == last.end() || r.step > it->second) last[r.episode_id] = r.step;
    }
    Dataset out;
    for (const Record& r : d.records)
        if (r.label != 1 || r.step != last[r.episode_id]) out.records.push_back(r);
    return out;
}

void fit_norm_stats(PolicyParams& params, const Dataset& inputs,
                    const Dataset& actions) {
    if (inputs.records.empty() || actions.records.empty())
        throw EmptyDataset("fit_norm_stats: empty dataset");
    NormStats& norm = params.norm();

    auto fit = [](const Dataset& d, Tensor& mean, Tensor& stdev, auto&& extract,
                  int dim) {
        const double n = static_cast<double>(d.size());
        std::vector<double> mu(dim, 0.0), var(dim, 0.0), v(dim);
        for (const Record& r : d.records) {
            extract(r, v.data());
            for (int i = 0; i < dim; ++i) mu[i] += v[i];
        }
        for (int i = 0; i < dim; ++i) mu[i] /= n;
        for (const Record& r : d.records) {
            extract(r, v.data());
            for (int i = 0; i < dim; ++i) {
                double d2 = v[i] - mu[i];
                var[i] += d2 * d2;
            }
        }
        for (int i = 0; i < dim; ++i) {
            mean.data[i] = mu[i];
            stdev.data[i] = std::max(std::sqrt(var[i] / n), 1e-6);
        }
    };

    fit(inputs, norm.pose_mean, norm.pose_std,
        [](const Record& r, double* v) {
            v[0] = r.obs.orientation.w;
            v[1] = r.obs.orientation.x;
            v[2] = r.obs.orientation.y;
            v[3] = r.obs.orientation.z;
        },
        4);
    fit(inputs, norm.force_mean, norm.force_std,
        [](const Record& r, double* v) {
            for (int i = 0; i < 3; ++i) v[i] = r.obs.wrench.force[i];
            for (int i = 0; i < 3; ++i) v[3 + i] = r.obs.wrench.torque[i];
        },
        6);
    fit(actions, norm.action_mean, norm.action_std,
        [](const Record& r, double* v) {
            for (int i = 0; i < 3; ++i) v[i] = r.action.dp[i];
            for (int i = 0; i < 4; ++i) v[3 + i] = r.action.dq[i];
        },
        7);
}

double eval_action_loss(PolicyParams& params, const Dataset& d) {
    if (d.records.empty()) throw EmptyDataset("eval_action_loss: empty dataset");
    double total = 0.0;
    for (const Record& r : d.records) {
        Tensor pred = params.action_forward(r.obs);
        Tensor target = standardized_action(params.norm(), r.action);
        total += mse_loss(pred, target).loss;
    }
    return total / static_cast<double>(d.size());
}

TrainReport train_bc(PolicyParams& params, const Dataset& train_full,
                     const Dataset& val_full, const TrainConfig& cfg) {
    cfg.validate();
    Dataset train = drop_terminal_records(train_full);
    Dataset val = drop_terminal_records(val_full);
    if (train.records.empty() || val.records.empty())
        throw EmptyDataset("train_bc: empty dataset");

    fit_norm_stats(params, train_full, train);

    std::vector<ParamGroup> groups = params.groups();
    set_trainable(groups, {"front", "action_head"});
    Optimizer opt(cfg.optimizer, cfg.alpha);

    TrainReport report;
    report.train_loss.push_back(eval_action_loss(params, train));
    report.val_loss.push_back(eval_action_loss(params, val));

    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> idx(train.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_indices(idx, rng);
        // Minibatch gradients are summed, matching the summed per-sample
        // update; the loss itself stays a per-pair component mean.
        for (size_t b = 0; b < idx.size(); b += cfg.batch_size) {
            size_t e = std::min(idx.size(), b + cfg.batch_size);
            params.zero_grads();
            for (size_t i = b; i < e; ++i) {
                const Record& r = train.records[idx[i]];
                Tensor pred = params.action_forward(r.obs);
                Tensor target = standardized_action(params.norm(), r.action);
                LossResult lr = mse_loss(pred, target);
                params.action_backward(lr.grad);
            }
            opt.step(groups);
        }
        double tl = eval_action_loss(params, train);
        double vl = eval_action_loss(params, val);
        if (!std::isfinite(tl))
            throw DivergenceDetected("train_bc: non-finite training loss");
        report.train_loss.push_back(tl);
        report.val_loss.push_back(vl);
    }
    params.bc_trained = true;
    report.final_checksum = params_checksum(params);
    return report;
}

TrainReport train_quality(PolicyParams& params, const Dataset& labeled,
                          const TrainConfig& cfg) {
    cfg.validate();
    size_t pos = 0;
    for (const Record& r : labeled.records) pos += (r.label == 1);
    if (pos == 0 || pos == labeled.size())
        throw SingleClassDataset("train_quality: need both classes");

    auto [train, val] = split_dataset(labeled, cfg.split_ratio, cfg.seed);

    // Front is frozen, so features are computed once per record.
    auto precompute = [&](const Dataset& d) {
        std::vector<Tensor> feats;
        feats.reserve(d.size());
        for (const Record& r : d.records) feats.push_back(params.encode(r.obs));
        return feats;
    };
    std::vector<Tensor> train_feats = precompute(train);
    std::vector<Tensor> val_feats = precompute(val);

    double w0 = 1.0, w1 = 1.0;
    if (cfg.class_weighted) {
        size_t tpos = 0;
        for (const Record& r : train.records) tpos += (r.label == 1);
        size_t tneg = train.size() - tpos;
        if (tpos == 0 || tneg == 0)
            throw SingleClassDataset("train_quality: train split lost a class");
        double n = static_cast<double>(train.size());
        w0 = n / (2.0 * tneg);
        w1 = n / (2.0 * tpos);
    }

    std::vector<ParamGroup> groups = params.groups();
    set_trainable(groups, {"quality_head"});
    Optimizer opt(cfg.optimizer, cfg.alpha);

    auto evaluate = [&](const Dataset& d, const std::vector<Tensor>& feats,
                        double& loss, double& acc) {
        loss = 0.0;
        size_t correct = 0;
        for (size_t i = 0; i < d.size(); ++i) {
            Tensor logits = params.quality_logits_from_features(feats[i]);
            int lab = d.records[i].label;
            loss += cross_entropy(logits, lab).loss;
            int pred = (logits.data[1] > logits.data[0]) ? 1 : 0;
            correct += (pred == lab);
        }
        loss /= static_cast<double>(d.size());
        acc = static_cast<double>(correct) / static_cast<double>(d.size());
    };

    TrainReport report;
    double tl, ta, vl, va;
    evaluate(train, train_feats, tl, ta);
    evaluate(val, val_feats, vl, va);
    report.train_loss.push_back(tl);
    report.val_loss.push_back(vl);
    report.train_acc.push_back(ta);
    report.val_acc.push_back(va);

    std::mt19937_64 rng(cfg.seed + 1);
    std::vector<size_t> idx(train.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_indices(idx, rng);
        for (size_t b = 0; b < idx.size(); b += cfg.batch_size) {
            size_t e = std::min(idx.size(), b + cfg.batch_size);
            params.zero_grads();
            for (size_t i = b; i < e; ++i) {
                size_t j = idx[i];
                int lab = train.records[j].label;
                Tensor logits = params.quality_logits_from_features(train_feats[j]);
                LossResult lr = cross_entropy(logits, lab);
                double w = (lab == 1 ? w1 : w0);
                for (double& g : lr.grad.data) g *= w;
                params.quality_head_backward(lr.grad);
            }
            opt.step(groups);
        }
        evaluate(train, train_feats, tl, ta);
        evaluate(val, val_feats, vl, va);
        if (!std::isfinite(tl))
            throw DivergenceDetected("train_quality: non-finite training loss");
        report.train_loss.push_back(tl);
        report.val_loss.push_back(vl);
        report.train_acc.push_back(ta);
        report.val_acc.push_back(va);
    }
    params.quality_trained = true;
    report.final_checksum = params_checksum(params);
    return report;
}

}  // namespace usscan
