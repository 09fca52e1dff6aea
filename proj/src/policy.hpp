#pragma once

#include <cstdint>
#include <memory>

#include "phantom.hpp"
#include "tensor.hpp"

namespace usscan {

struct InvalidConfig : UsError {
    explicit InvalidConfig(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

struct ArchConfig {
    int image_h = 64;
    int image_w = 64;
    int conv1_ch = 8;
    int conv2_ch = 16;
    int conv_kernel = 3;
    int conv_stride = 2;
    int feature_dim = 32;   // paper scale uses 128
    int encoder_hidden = 32;
    int action_hidden = 64;
    int quality_hidden = 64;

    int concat_width() const { return 3 * feature_dim; }
    void validate() const;
};

// Per-dimension standardization statistics, fitted on the training split
// and carried with the parameters (serialized, never optimized).
struct NormStats {
    Tensor pose_mean{{4}}, pose_std{{4}};
    Tensor force_mean{{6}}, force_std{{6}};
    Tensor action_mean{{7}}, action_std{{7}};

    NormStats() {
        for (Tensor* t : {&pose_std, &force_std, &action_std})
            std::fill(t->data.begin(), t->data.end(), 1.0);
    }
};

// The full multi-modal policy: three encoders feeding a concatenated
// feature vector, with an action head and a state-quality head on top.
// Parameter groups: front (all encoders), action_head, quality_head.
class PolicyParams {
public:
    PolicyParams(const ArchConfig& cfg, std::uint64_t seed);

    const ArchConfig& cfg() const { return cfg_; }
    NormStats& norm() { return norm_; }
    const NormStats& norm() const { return norm_; }

    bool bc_trained = false;
    bool quality_trained = false;

    // Group order is fixed: front, action_head, quality_head, norm.
    std::vector<ParamGroup> groups();
    // Flat tensor enumeration in declaration order (checkpoint layout).
    std::vector<Tensor*> all_tensors();
    size_t param_count();

    // Forward passes. Observation.position is never read.
    Tensor encode(const Observation& obs);
    Tensor action_forward(const Observation& obs);   // standardized 7-vector
    Tensor quality_logits(const Observation& obs);
    Action predict_action(const Observation& obs);
    double quality(const Observation& obs);          // P(label 1), in [0,1]

    // Backward through head + encoders; call right after the matching
    // forward. Accumulates into layer gradients.
    void action_backward(const Tensor& dpred);
    void quality_backward(const Tensor& dlogits);

    // Head-only paths over precomputed front features (front frozen).
    Tensor quality_logits_from_features(const Tensor& feat);
    void quality_head_backward(const Tensor& dlogits);

    void zero_grads();

    void copy_state_from(const PolicyParams& other);

private:
    Tensor obs_inputs(const Observation& obs, Tensor& image, Tensor& pose,
                      Tensor& force) const;
    void encode_backward(const Tensor& dfeat);

    ArchConfig cfg_;
    NormStats norm_;
    Network image_net_, pose_net_, force_net_, action_net_, quality_net_;
};

using PolicyPtr = std::unique_ptr<PolicyParams>;

PolicyPtr init_policy(const ArchConfig& cfg, std::uint64_t seed);
PolicyPtr clone_policy(const PolicyParams& p);

}  // namespace usscan
