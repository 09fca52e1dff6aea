#include "geometry.hpp"

namespace usscan {

Vec3 Quaternion::rotate(const Vec3& v) const {
    Quaternion p{0.0, v[0], v[1], v[2]};
    Quaternion r = (*this) * p * Quaternion{w, -x, -y, -z};
    return {r.x, r.y, r.z};
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
    double n = usscan::norm(axis);
    if (n <= 1e-12)
        throw DegenerateQuaternion("from_axis_angle: zero axis");
    double h = 0.5 * angle;
    double s = std::sin(h) / n;
    return {std::cos(h), s * axis[0], s * axis[1], s * axis[2]};
}

Quaternion quat_normalize(const Quaternion& q) {
    double n = q.norm();
    if (n <= 1e-12)
        throw DegenerateQuaternion("quat_normalize: norm <= 1e-12");
    if (n == 1.0) return q;
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Action action_between(const ProbeFrame& prev, const ProbeFrame& next) {
    Action a;
    a.dp = next.position - prev.position;
    Quaternion d = next.orientation - prev.orientation;
    a.dq = {d.w, d.x, d.y, d.z};
    return a;
}

ProbeFrame apply_action(const ProbeFrame& frame, const Action& a, const Box& workspace) {
    if (a.is_zero() && workspace.contains(frame.position)) return frame;
    ProbeFrame out;
    out.position = workspace.clamp(frame.position + a.dp);
    Quaternion q{frame.orientation.w + a.dq[0], frame.orientation.x + a.dq[1],
                 frame.orientation.y + a.dq[2], frame.orientation.z + a.dq[3]};
    out.orientation = quat_normalize(q);
    return out;
}

Action cap_action(const Action& a, double max_dp) {
    double n = norm(a.dp);
    if (n <= max_dp) return a;
    Action c = a;
    c.dp = (max_dp / n) * a.dp;
    return c;
}

}  // namespace usscan
