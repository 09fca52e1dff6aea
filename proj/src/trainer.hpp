#pragma once

#include <cstdint>

#include "policy.hpp"

namespace usscan {

struct EmptyDataset : UsError {
    explicit EmptyDataset(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

struct SingleClassDataset : UsError {
    explicit SingleClassDataset(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

struct DivergenceDetected : UsError {
    explicit DivergenceDetected(const std::string& msg)
        : UsError(ErrorKind::Divergence, msg) {}
};

struct Record {
    Observation obs;
    Action action;
    int label = 0;
    std::uint32_t episode_id = 0;
    std::uint32_t step = 0;
};

struct Dataset {
    std::vector<Record> records;
    size_t size() const { return records.size(); }
};

struct TrainConfig {
    double alpha = 0.001;
    int epochs = 50;
    int batch_size = 32;
    double split_ratio = 0.8;
    std::uint64_t seed = 0;
    OptKind optimizer = OptKind::Sgd;
    bool class_weighted = false;

    void validate() const {
        if (alpha <= 0.0) throw InvalidConfig("TrainConfig: alpha must be > 0");
        if (split_ratio <= 0.0 || split_ratio >= 1.0)
            throw InvalidConfig("TrainConfig: split_ratio must be in (0,1)");
        if (epochs < 0 || batch_size <= 0)
            throw InvalidConfig("TrainConfig: bad epochs/batch_size");
    }
};

// Row 0 is the pre-training (epoch 0) evaluation.
struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_acc;  // quality training only
    std::vector<double> val_acc;
    std::uint64_t final_checksum = 0;
};

std::uint64_t params_checksum(PolicyParams& params);

// Episode-aware deterministic split: whole episodes land on one side and
// the train record count lands as close to floor(ratio * N) as the episode
// boundaries allow (exact when every record is its own episode).
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio,
                                          std::uint64_t seed);

// Drops each episode's final record when it is a goal (label-1) record: a
// demonstration ends at the goal frame, which has no successor motion, so
// its stored action is a placeholder and carries no regression pair.
Dataset drop_terminal_records(const Dataset& d);

// Fits standardization stats and stores them in params.norm(): pose/force
// stats over every record in `inputs`, action stats over `actions` (which
// should hold genuine motion pairs only, i.e. terminal records dropped).
void fit_norm_stats(PolicyParams& params, const Dataset& inputs,
                    const Dataset& actions);

// Behavior cloning: MSE regression of the standardized 7-vector action,
// updating front + action_head only. Fits norm stats first.
TrainReport train_bc(PolicyParams& params, const Dataset& train,
                     const Dataset& val, const TrainConfig& cfg);

// Cross-entropy training of the quality head over frozen front features.
// Splits `labeled` internally per cfg.split_ratio.
TrainReport train_quality(PolicyParams& params, const Dataset& labeled,
                          const TrainConfig& cfg);

// Mean action MSE (standardized target space) over a dataset, no updates.
double eval_action_loss(PolicyParams& params, const Dataset& d);

}  // namespace usscan
