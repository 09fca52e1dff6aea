#include "phantom.hpp"

#include <algorithm>

#include "rng.hpp"

namespace usscan {

const std::vector<double>& Phantom::speckle() const {
    size_t n = static_cast<size_t>(image_height) * image_width;
    if (speckle_cache_.size() != n) {
        std::mt19937_64 rng(speckle_seed);
        speckle_cache_.resize(n);
        for (size_t i = 0; i < n; ++i)
            speckle_cache_[i] = uniform(rng, 0.8, 1.2);
    }
    return speckle_cache_;
}

double Phantom::tilt_angle(const Quaternion& q) {
    Vec3 d = probe_axis(q);
    double c = std::clamp(-d[2], -1.0, 1.0);
    return std::acos(c);
}

Wrench contact_wrench(const Phantom& ph, const ProbeFrame& frame) {
    Wrench w;
    double pen = ph.surface_height - frame.position[2];
    if (pen <= 0.0) return w;
    double dx = frame.position[0] - ph.target_center[0];
    double dy = frame.position[1] - ph.target_center[1];
    double k = ph.stiffness;
    if (std::hypot(dx, dy) < ph.core_radius) k *= 1.0 + ph.stiffness_contrast;
    double fz = k * pen;
    w.force = {0.0, 0.0, fz};
    Vec3 d = Phantom::probe_axis(frame.orientation);
    Vec3 axis = cross({0.0, 0.0, 1.0}, d);
    double n = norm(axis);
    if (n > 1e-12) {
        double tilt = Phantom::tilt_angle(frame.orientation);
        w.torque = (ph.torque_coeff * tilt * fz / n) * axis;
    }
    return w;
}

Image render_image(const Phantom& ph, const ProbeFrame& frame) {
    Image img;
    img.height = ph.image_height;
    img.width = ph.image_width;
    img.pixels.assign(static_cast<size_t>(img.height) * img.width,
                      ph.background_level);

    double dx = frame.position[0] - ph.target_center[0];
    double dy = frame.position[1] - ph.target_center[1];
    if (std::hypot(dx, dy) < ph.beam_width) dx = dy = 0.0;
    Vec3 d = Phantom::probe_axis(frame.orientation);
    double u_off = ph.px_per_m * dx + ph.px_per_rad * d[0];
    double v_off = ph.px_per_m * dy + ph.px_per_rad * d[1];

    bool in_fov = std::hypot(u_off, v_off) <= ph.fov_px;
    if (in_fov) {
        double ecx = 0.5 * (img.width - 1) + u_off;
        double ecy = 0.5 * (img.height - 1) + v_off;
        double a_px = ph.target_radii[0] * ph.px_per_m;
        double b_px = ph.target_radii[1] * ph.px_per_m;
        for (int r = 0; r < img.height; ++r) {
            double vy = (r - ecy) / b_px;
            for (int c = 0; c < img.width; ++c) {
                double vx = (c - ecx) / a_px;
                if (vx * vx + vy * vy <= 1.0)
                    img.pixels[static_cast<size_t>(r) * img.width + c] = ph.target_level;
            }
        }
    }

    const std::vector<double>& sp = ph.speckle();
    for (size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = std::clamp(img.pixels[i] * sp[i], 0.0, 1.0);
    return img;
}

int ground_truth_label(const Phantom& ph, const ProbeFrame& frame) {
    double dx = frame.position[0] - ph.target_center[0];
    double dy = frame.position[1] - ph.target_center[1];
    if (std::hypot(dx, dy) >= ph.tol_pos) return 0;
    if (Phantom::tilt_angle(frame.orientation) >= ph.tol_ang) return 0;
    if (ph.surface_height - frame.position[2] <= 0.0) return 0;
    return 1;
}

Observation observe(const Phantom& ph, const ProbeFrame& frame) {
    Observation o;
    o.image = render_image(ph, frame);
    o.position = frame.position;
    o.orientation = frame.orientation;
    o.wrench = contact_wrench(ph, frame);
    return o;
}

ProbeFrame sample_start(const Phantom& ph, std::mt19937_64& rng) {
    double r = uniform(rng, ph.annulus_r_in, ph.annulus_r_out);
    double ang = uniform(rng, 0.0, 2.0 * M_PI);
    double tilt = uniform(rng, 0.0, ph.start_tilt_max);
    double tilt_dir = uniform(rng, 0.0, 2.0 * M_PI);

    ProbeFrame f;
    f.position = {ph.target_center[0] + r * std::cos(ang),
                  ph.target_center[1] + r * std::sin(ang),
                  ph.surface_height - ph.scan_depth};
    if (tilt > 1e-12) {
        Vec3 axis{std::cos(tilt_dir), std::sin(tilt_dir), 0.0};
        f.orientation = Quaternion::from_axis_angle(axis, tilt);
    }
    return f;
}

std::pair<SimState, Observation> step(const Phantom& ph, const SimState& state,
                                      const Action& a) {
    Action capped = cap_action(a, ph.step_cap);
    SimState next;
    next.frame = apply_action(state.frame, capped, ph.workspace);
    next.step_index = state.step_index + 1;
    return {next, observe(ph, next.frame)};
}

Action oracle_policy(const Phantom& ph, const SimState& state) {
    Action a;
    if (ground_truth_label(ph, state.frame) == 1) return a;

    Vec3 err = ph.goal_position() - state.frame.position;
    a.dp = ph.oracle_kp * err;
    double dpn = norm(a.dp);
    if (dpn > ph.oracle_dp_cap) a.dp = (ph.oracle_dp_cap / dpn) * a.dp;

    const Quaternion& q = state.frame.orientation;
    Quaternion target{1, 0, 0, 0};
    Quaternion dq = target - q;
    a.dq = {ph.oracle_ko * dq.w, ph.oracle_ko * dq.x, ph.oracle_ko * dq.y,
            ph.oracle_ko * dq.z};
    double dqn = std::sqrt(a.dq[0] * a.dq[0] + a.dq[1] * a.dq[1] +
                           a.dq[2] * a.dq[2] + a.dq[3] * a.dq[3]);
    if (dqn > ph.oracle_dq_cap) {
        double s = ph.oracle_dq_cap / dqn;
        for (double& c : a.dq) c *= s;
    }
    return cap_action(a, ph.step_cap);
}

EpisodeTrace record_demonstration(const Phantom& ph, std::mt19937_64& rng,
                                  TruncationMode mode, int hold_steps) {
    EpisodeTrace trace;
    SimState state{sample_start(ph, rng), 0};
    Observation obs = observe(ph, state.frame);

    for (int t = 0; t <= ph.max_episode_steps; ++t) {
        int label = ground_truth_label(ph, state.frame);
        if (label == 1) {
            trace.steps.push_back({obs, Action{}, 0.0, 1});
            if (mode == TruncationMode::Hold) {
                for (int h = 0; h < hold_steps; ++h) {
                    auto [ns, nobs] = step(ph, state, Action{});
                    state = ns;
                    obs = nobs;
                    trace.steps.push_back({obs, Action{}, 0.0, 1});
                }
            }
            double ox = state.frame.position[0] - ph.target_center[0];
            double oy = state.frame.position[1] - ph.target_center[1];
            trace.final_lateral_offset = std::hypot(ox, oy);
            trace.success = true;
            return trace;
        }
        Action a = oracle_policy(ph, state);
        trace.steps.push_back({obs, a, 0.0, label});
        auto [ns, nobs] = step(ph, state, a);
        state = ns;
        obs = nobs;
    }
    throw EpisodeDiverged("record_demonstration: label 1 not reached within max_episode_steps");
}

}  // namespace usscan
