#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace usscan {

// Error kinds map onto process exit codes at the CLI boundary:
// validation -> 1, divergence -> 2, io -> 3.
enum class ErrorKind { Validation, Divergence, Io };

class UsError : public std::runtime_error {
public:
    UsError(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct DegenerateQuaternion : UsError {
    explicit DegenerateQuaternion(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& v) {
    return {s * v[0], s * v[1], s * v[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    bool is_unit(double tol = 1e-9) const { return std::abs(norm() - 1.0) <= tol; }

    Quaternion operator+(const Quaternion& o) const {
        return {w + o.w, x + o.x, y + o.y, z + o.z};
    }
    Quaternion operator-(const Quaternion& o) const {
        return {w - o.w, x - o.x, y - o.y, z - o.z};
    }
    bool operator==(const Quaternion& o) const = default;

    // Hamilton product.
    Quaternion operator*(const Quaternion& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    // Rotate a vector by this (assumed unit) quaternion.
    Vec3 rotate(const Vec3& v) const;

    static Quaternion from_axis_angle(const Vec3& axis, double angle);
};

// Scales a quaternion-like 4-vector to unit norm.
// Throws DegenerateQuaternion when the input norm is <= 1e-12.
Quaternion quat_normalize(const Quaternion& q);

// Axis-aligned workspace bounds for probe positions.
struct Box {
    Vec3 lo{-0.15, -0.15, -0.15};
    Vec3 hi{0.15, 0.15, 0.15};

    Vec3 clamp(const Vec3& p) const {
        Vec3 r = p;
        for (int i = 0; i < 3; ++i) {
            if (r[i] < lo[i]) r[i] = lo[i];
            if (r[i] > hi[i]) r[i] = hi[i];
        }
        return r;
    }
    bool contains(const Vec3& p) const {
        for (int i = 0; i < 3; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
};

struct ProbeFrame {
    Vec3 position{0, 0, 0};
    Quaternion orientation{};
};

// a = <dP, dO>: position difference in meters, raw componentwise
// quaternion difference (not a rotation).
struct Action {
    Vec3 dp{0, 0, 0};
    std::array<double, 4> dq{0, 0, 0, 0};

    bool is_zero() const {
        return dp[0] == 0 && dp[1] == 0 && dp[2] == 0 && dq[0] == 0 &&
               dq[1] == 0 && dq[2] == 0 && dq[3] == 0;
    }
};

// dP = next.position - prev.position, dO componentwise.
Action action_between(const ProbeFrame& prev, const ProbeFrame& next);

// position clamped to the workspace, orientation renormalized after the
// componentwise add. Zero action on an in-box frame is the exact identity.
ProbeFrame apply_action(const ProbeFrame& frame, const Action& a, const Box& workspace);

// Scales dp down to max_dp when it exceeds it; dq left untouched.
Action cap_action(const Action& a, double max_dp);

}  // namespace usscan
