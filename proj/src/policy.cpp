#include "policy.hpp"

#include <cmath>

namespace usscan {

void ArchConfig::validate() const {
    if (image_h <= 0 || image_w <= 0 || conv1_ch <= 0 || conv2_ch <= 0 ||
        conv_kernel <= 0 || conv_stride <= 0 || feature_dim <= 0 ||
        encoder_hidden <= 0 || action_hidden <= 0 || quality_hidden <= 0)
        throw InvalidConfig("ArchConfig: all sizes must be positive");
    int h1 = (image_h - conv_kernel) / conv_stride + 1;
    int w1 = (image_w - conv_kernel) / conv_stride + 1;
    if (h1 <= 0 || w1 <= 0)
        throw InvalidConfig("ArchConfig: conv1 output empty");
    int h2 = (h1 - conv_kernel) / conv_stride + 1;
    int w2 = (w1 - conv_kernel) / conv_stride + 1;
    if (h2 <= 0 || w2 <= 0)
        throw InvalidConfig("ArchConfig: conv2 output empty");
}

PolicyParams::PolicyParams(const ArchConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    std::mt19937_64 rng(seed);

    int h1 = (cfg.image_h - cfg.conv_kernel) / cfg.conv_stride + 1;
    int w1 = (cfg.image_w - cfg.conv_kernel) / cfg.conv_stride + 1;
    int h2 = (h1 - cfg.conv_kernel) / cfg.conv_stride + 1;
    int w2 = (w1 - cfg.conv_kernel) / cfg.conv_stride + 1;
    int flat = cfg.conv2_ch * h2 * w2;

    image_net_.add(std::make_unique<Conv2d>(1, cfg.conv1_ch, cfg.conv_kernel,
                                            cfg.conv_stride, rng));
    image_net_.add(std::make_unique<Relu>());
    image_net_.add(std::make_unique<Conv2d>(cfg.conv1_ch, cfg.conv2_ch,
                                            cfg.conv_kernel, cfg.conv_stride, rng));
    image_net_.add(std::make_unique<Relu>());
    image_net_.add(std::make_unique<Flatten>());
    image_net_.add(std::make_unique<Dense>(flat, cfg.feature_dim, rng));

    pose_net_.add(std::make_unique<Dense>(4, cfg.encoder_hidden, rng));
    pose_net_.add(std::make_unique<Relu>());
    pose_net_.add(std::make_unique<Dense>(cfg.encoder_hidden, cfg.feature_dim, rng));

    force_net_.add(std::make_unique<Dense>(6, cfg.encoder_hidden, rng));
    force_net_.add(std::make_unique<Relu>());
    force_net_.add(std::make_unique<Dense>(cfg.encoder_hidden, cfg.feature_dim, rng));

    action_net_.add(std::make_unique<Dense>(cfg.concat_width(), cfg.action_hidden, rng));
    action_net_.add(std::make_unique<Relu>());
    action_net_.add(std::make_unique<Dense>(cfg.action_hidden, 7, rng));

    quality_net_.add(std::make_unique<Dense>(cfg.concat_width(), cfg.quality_hidden, rng));
    quality_net_.add(std::make_unique<Relu>());
    quality_net_.add(std::make_unique<Dense>(cfg.quality_hidden, 2, rng));
}

std::vector<ParamGroup> PolicyParams::groups() {
    ParamGroup front{"front", {}, {}, true};
    for (Network* n : {&image_net_, &pose_net_, &force_net_}) {
        for (Tensor* p : n->params()) front.tensors.push_back(p);
        for (Tensor* g : n->grads()) front.grads.push_back(g);
    }
    ParamGroup action{"action_head", action_net_.params(), action_net_.grads(), true};
    ParamGroup quality{"quality_head", quality_net_.params(), quality_net_.grads(), true};
    ParamGroup norm{"norm",
                    {&norm_.pose_mean, &norm_.pose_std, &norm_.force_mean,
                     &norm_.force_std, &norm_.action_mean, &norm_.action_std},
                    {},
                    false};
    return {front, action, quality, norm};
}

std::vector<Tensor*> PolicyParams::all_tensors() {
    std::vector<Tensor*> out;
    for (ParamGroup& g : groups())
        for (Tensor* t : g.tensors) out.push_back(t);
    return out;
}

size_t PolicyParams::param_count() {
    size_t n = 0;
    for (Tensor* t : all_tensors()) n += t->size();
    return n;
}

Tensor PolicyParams::obs_inputs(const Observation& obs, Tensor& image, Tensor& pose,
                                Tensor& force) const {
    if (obs.image.height != cfg_.image_h || obs.image.width != cfg_.image_w)
        throw ShapeMismatch("encode: image resolution mismatch");
    image = Tensor({1, cfg_.image_h, cfg_.image_w});
    image.data = obs.image.pixels;

    pose = Tensor({4});
    const double p[4] = {obs.orientation.w, obs.orientation.x, obs.orientation.y,
                         obs.orientation.z};
    for (int i = 0; i < 4; ++i)
        pose.data[i] = (p[i] - norm_.pose_mean.data[i]) / norm_.pose_std.data[i];

    force = Tensor({6});
    const double f[6] = {obs.wrench.force[0],  obs.wrench.force[1],
                         obs.wrench.force[2],  obs.wrench.torque[0],
                         obs.wrench.torque[1], obs.wrench.torque[2]};
    for (int i = 0; i < 6; ++i)
        force.data[i] = (f[i] - norm_.force_mean.data[i]) / norm_.force_std.data[i];
    return {};
}

Tensor PolicyParams::encode(const Observation& obs) {
    Tensor image, pose, force;
    obs_inputs(obs, image, pose, force);
    Tensor fi = image_net_.forward(image);
    Tensor fp = pose_net_.forward(pose);
    Tensor ff = force_net_.forward(force);
    Tensor out({cfg_.concat_width()});
    int fd = cfg_.feature_dim;
    std::copy(fi.data.begin(), fi.data.end(), out.data.begin());
    std::copy(fp.data.begin(), fp.data.end(), out.data.begin() + fd);
    std::copy(ff.data.begin(), ff.data.end(), out.data.begin() + 2 * fd);
    return out;
}

void PolicyParams::encode_backward(const Tensor& dfeat) {
    int fd = cfg_.feature_dim;
    Tensor di({fd}), dp({fd}), df({fd});
    std::copy(dfeat.data.begin(), dfeat.data.begin() + fd, di.data.begin());
    std::copy(dfeat.data.begin() + fd, dfeat.data.begin() + 2 * fd, dp.data.begin());
    std::copy(dfeat.data.begin() + 2 * fd, dfeat.data.end(), df.data.begin());
    image_net_.backward(di);
    pose_net_.backward(dp);
    force_net_.backward(df);
}

Tensor PolicyParams::action_forward(const Observation& obs) {
    return action_net_.forward(encode(obs));
}

Tensor PolicyParams::quality_logits(const Observation& obs) {
    return quality_net_.forward(encode(obs));
}

void PolicyParams::action_backward(const Tensor& dpred) {
    encode_backward(action_net_.backward(dpred));
}

void PolicyParams::quality_backward(const Tensor& dlogits) {
    encode_backward(quality_net_.backward(dlogits));
}

Tensor PolicyParams::quality_logits_from_features(const Tensor& feat) {
    return quality_net_.forward(feat);
}

void PolicyParams::quality_head_backward(const Tensor& dlogits) {
    quality_net_.backward(dlogits);
}

Action PolicyParams::predict_action(const Observation& obs) {
    Tensor y = action_forward(obs);
    double a[7];
    for (int i = 0; i < 7; ++i)
        a[i] = y.data[i] * norm_.action_std.data[i] + norm_.action_mean.data[i];
    Action act;
    act.dp = {a[0], a[1], a[2]};
    act.dq = {a[3], a[4], a[5], a[6]};
    return act;
}

double PolicyParams::quality(const Observation& obs) {
    Tensor logits = quality_logits(obs);
    double mx = std::max(logits.data[0], logits.data[1]);
    double e0 = std::exp(logits.data[0] - mx);
    double e1 = std::exp(logits.data[1] - mx);
    return e1 / (e0 + e1);
}

void PolicyParams::zero_grads() {
    image_net_.zero_grads();
    pose_net_.zero_grads();
    force_net_.zero_grads();
    action_net_.zero_grads();
    quality_net_.zero_grads();
}

void PolicyParams::copy_state_from(const PolicyParams& other) {
    PolicyParams& o = const_cast<PolicyParams&>(other);
    std::vector<Tensor*> dst = all_tensors();
    std::vector<Tensor*> src = o.all_tensors();
    if (dst.size() != src.size())
        throw ShapeMismatch("copy_state_from: tensor count mismatch");
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->size() != src[i]->size())
            throw ShapeMismatch("copy_state_from: tensor size mismatch");
        dst[i]->data = src[i]->data;
    }
    bc_trained = other.bc_trained;
    quality_trained = other.quality_trained;
}

PolicyPtr init_policy(const ArchConfig& cfg, std::uint64_t seed) {
    return std::make_unique<PolicyParams>(cfg, seed);
}

PolicyPtr clone_policy(const PolicyParams& p) {
    auto out = std::make_unique<PolicyParams>(p.cfg(), 0);
    out->copy_state_from(p);
    return out;
}

}  // namespace usscan
