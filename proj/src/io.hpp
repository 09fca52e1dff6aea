#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>

#include "guided.hpp"

namespace usscan {

struct IoError : UsError {
    explicit IoError(const std::string& msg) : UsError(ErrorKind::Io, msg) {}
};

struct ConfigMismatch : UsError {
    explicit ConfigMismatch(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

// Whole-experiment configuration. Serializes to a flat "key = value" text
// file; unknown keys are rejected on parse.
struct RunConfig {
    Phantom phantom;
    ArchConfig arch;
    TrainConfig bc;
    TrainConfig quality;
    GuidanceConfig guidance;

    std::uint64_t master_seed = 42;
    std::string out_dir = "out";
    int episodes = 100;
    bool hold_mode = false;  // demonstration truncation: hold vs truncated
    int hold_steps = 10;
    int eval_episodes = 50;
    int eval_max_steps = 60;

    RunConfig();  // applies cross-field defaults (quality epochs etc.)

    void save(const std::filesystem::path& path) const;
    static RunConfig load(const std::filesystem::path& path);

    std::string serialize() const;
    static RunConfig parse(const std::string& text);

    // Single-key access using the text-format key names.
    void set_key(const std::string& key, const std::string& value);
    std::string get_key(const std::string& key) const;

    // Keeps phantom image resolution in lockstep with the arch config.
    void sync() {
        phantom.image_height = arch.image_h;
        phantom.image_width = arch.image_w;
    }
};

// Binary demonstration dataset, little-endian.
// Header: "USDEMO", u32 version, u32 H, u32 W, u64 records, u32 episodes.
// Record: episode_id u32, step u32, image f32[H*W], P f64[3], O f64[4],
//         F f64[6], action f64[7], label u8.
void write_dataset(const std::filesystem::path& path, const Dataset& d,
                   int image_h, int image_w);
Dataset read_dataset(const std::filesystem::path& path);

// Binary checkpoint, little-endian.
// Header: "USCKPT", u32 version, ArchConfig echo (10 x i32), flags
// (bc_trained u8, quality_trained u8), u64 tensor-element count, u64
// FNV-1a checksum of the payload, then all parameter tensors as f64 in
// declaration order.
void write_checkpoint(const std::filesystem::path& path, PolicyParams& params);
PolicyPtr read_checkpoint(const std::filesystem::path& path, const ArchConfig& expect);

// CSV emitters; every file carries a header row.
void write_train_report_csv(const std::filesystem::path& path, const TrainReport& r);
void write_postopt_report_csv(const std::filesystem::path& path, const PostOptReport& r);
void write_eval_csv(const std::filesystem::path& path, const EvalResult& result);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& d);

}  // namespace usscan
