#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "geometry.hpp"

namespace usscan {

struct EpisodeDiverged : UsError {
    explicit EpisodeDiverged(const std::string& msg)
        : UsError(ErrorKind::Divergence, msg) {}
};

struct Wrench {
    Vec3 force{0, 0, 0};
    Vec3 torque{0, 0, 0};
};

// Single-channel image, pixels in [0,1], row-major.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    double at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
};

// s = <X, O, F>; P is recorded alongside but is never a network input.
struct Observation {
    Image image;
    Vec3 position{0, 0, 0};
    Quaternion orientation{};
    Wrench wrench;
};

struct SimState {
    ProbeFrame frame;
    int step_index = 0;
};

// Synthetic tissue block with an embedded ellipsoidal target. All derived
// quantities (image, wrench, label) are pure functions of (phantom, frame).
struct Phantom {
    double surface_height = 0.0;          // m, z of the skin plane
    Vec3 target_center{0.0, 0.0, -0.03};  // m, below the surface
    Vec3 target_radii{0.018, 0.012, 0.010};  // m, ellipsoid semi-axes
    double stiffness = 200.0;             // N/m, background tissue
    // The inclusion has a firm core with a sharp palpable margin: effective
    // stiffness steps up to stiffness * (1 + contrast) when the lateral
    // offset from the target center is below core_radius.
    double stiffness_contrast = 0.5;
    double core_radius = 0.005;           // m
    double torque_coeff = 0.05;           // m, lever arm for tilt torque
    std::uint64_t speckle_seed = 0;

    int image_height = 64;
    int image_width = 64;
    double background_level = 0.1;
    double target_level = 0.9;
    double px_per_m = 1500.0;   // lateral offset -> pixel displacement
    double px_per_rad = 60.0;   // tilt -> pixel displacement
    double fov_px = 90.0;       // displacement beyond this renders no target
    // Lateral resolution limit of the beam: positional offsets below this
    // are not resolved and the target renders centered.
    double beam_width = 0.005;  // m

    double scan_depth = 0.005;  // m, nominal penetration below the surface
    double tol_pos = 0.005;     // m, lateral acceptance radius
    double tol_ang = 5.0 * M_PI / 180.0;  // rad, acceptance tilt

    double annulus_r_in = 0.01;   // m, start band (1-3 cm)
    double annulus_r_out = 0.03;
    double start_tilt_max = 6.0 * M_PI / 180.0;

    double step_cap = 0.01;     // m, per-step |dP| cap
    Box workspace{{-0.15, -0.15, -0.18}, {0.15, 0.15, 0.12}};

    double oracle_kp = 1.0;
    double oracle_ko = 0.3;
    double oracle_dp_cap = 0.0015;  // m, expert approach speed
    double oracle_dq_cap = 0.05;

    int max_episode_steps = 200;

    // Fixed per-phantom multiplicative speckle grid, uniform [0.8, 1.2].
    const std::vector<double>& speckle() const;

    // Probe axis in world coordinates (body -z rotated by the orientation).
    static Vec3 probe_axis(const Quaternion& q) { return q.rotate({0, 0, -1}); }
    // Tilt angle between the probe axis and straight-down.
    static double tilt_angle(const Quaternion& q);

    Vec3 goal_position() const {
        return {target_center[0], target_center[1], surface_height - scan_depth};
    }

private:
    mutable std::vector<double> speckle_cache_;
};

// Spring model: zero out of contact; in contact the normal force is
// k_eff * penetration along +z, where k_eff steps up over the firm core,
// and the torque is torque_coeff * tilt * |Fz| about the unit axis
// (z_hat x probe_axis).
Wrench contact_wrench(const Phantom& ph, const ProbeFrame& frame);

// Bright ellipse on dark background, displaced from image center by
// px_per_m * lateral offset + px_per_rad * tilt, under fixed speckle.
// Offsets below beam_width are not resolved (the ellipse stays centered).
Image render_image(const Phantom& ph, const ProbeFrame& frame);

// 1 iff lateral offset < tol_pos AND tilt < tol_ang AND in contact.
int ground_truth_label(const Phantom& ph, const ProbeFrame& frame);

Observation observe(const Phantom& ph, const ProbeFrame& frame);

// Start frame in the annulus band around the target, at contact depth,
// with a small random tilt.
ProbeFrame sample_start(const Phantom& ph, std::mt19937_64& rng);

std::pair<SimState, Observation> step(const Phantom& ph, const SimState& state,
                                      const Action& a);

// Scripted proportional controller standing in for the human demonstrator:
// steps toward the centered vertical pose, zero action once the label is 1.
Action oracle_policy(const Phantom& ph, const SimState& state);

struct TraceStep {
    Observation obs;
    Action action;  // action taken from this state to the next
    double confidence = 0.0;
    int label = 0;
};

struct EpisodeTrace {
    std::vector<TraceStep> steps;
    double final_lateral_offset = 0.0;
    bool success = false;
    bool overshoot = false;
};

enum class TruncationMode {
    Truncated,  // stop the moment the label turns 1 (no stopping behavior taught)
    Hold,       // append hold_steps zero-action steps at the goal
};

// Rolls the oracle from a sampled start until the label turns 1.
// Throws EpisodeDiverged if that does not happen within max_episode_steps.
EpisodeTrace record_demonstration(const Phantom& ph, std::mt19937_64& rng,
                                  TruncationMode mode, int hold_steps = 10);

}  // namespace usscan
