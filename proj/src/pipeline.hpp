#pragma once

#include "io.hpp"

namespace usscan {

// Deterministic per-purpose seed streams derived from the master seed.
namespace seeds {
constexpr std::uint64_t kInit = 9001;
constexpr std::uint64_t kBcTrain = 9002;
constexpr std::uint64_t kQualityTrain = 9003;
constexpr std::uint64_t kPostOpt = 9004;
constexpr std::uint64_t kEval = 9005;
}  // namespace seeds

struct GenSummary {
    size_t records = 0;
    size_t label1 = 0;
    size_t episodes = 0;
};

Dataset demos_to_dataset(const Phantom& ph, std::uint64_t master_seed, int episodes,
                         TruncationMode mode, int hold_steps);

GenSummary cmd_gen_data(const RunConfig& cfg, const std::filesystem::path& out_path);

TrainReport cmd_train_bc(const RunConfig& cfg, const std::filesystem::path& data_path,
                         const std::filesystem::path& out_ckpt,
                         const std::filesystem::path& report_csv);

TrainReport cmd_train_quality(const RunConfig& cfg,
                              const std::filesystem::path& data_path,
                              const std::filesystem::path& in_ckpt,
                              const std::filesystem::path& out_ckpt,
                              const std::filesystem::path& report_csv);

PostOptReport cmd_post_opt(const RunConfig& cfg, const std::filesystem::path& in_ckpt,
                           const std::filesystem::path& out_ckpt,
                           const std::filesystem::path& report_csv);

RolloutSummary cmd_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                        int n_episodes, const std::filesystem::path& out_csv,
                        bool use_oracle);

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Finite-difference validation of every layer kind plus the full policy
// composites. `inject_fault` corrupts one analytic gradient on purpose
// (test hook for the failure path).
std::vector<GradCheckEntry> cmd_gradcheck(bool inject_fault = false);

}  // namespace usscan
