#pragma once

#include "spatialforge/types.hpp"

#include <cmath>

namespace spatialforge {

template <class S> Mat3<S> rot_x(S a) {
    Mat3<S> m;
    m << S(1), S(0), S(0),
         S(0), std::cos(a), -std::sin(a),
         S(0), std::sin(a), std::cos(a);
    return m;
}

template <class S> Mat3<S> rot_y(S a) {
    Mat3<S> m;
    m << std::cos(a), S(0), std::sin(a),
         S(0), S(1), S(0),
         -std::sin(a), S(0), std::cos(a);
    return m;
}

template <class S> Mat3<S> rot_z(S a) {
    Mat3<S> m;
    m << std::cos(a), -std::sin(a), S(0),
         std::sin(a), std::cos(a), S(0),
         S(0), S(0), S(1);
    return m;
}

/// Intrinsic Z-Y-X composition under the Z-up world: yaw about Z, then pitch
/// about the rotated Y, then roll about the rotated X.
template <class S> Mat3<S> euler_to_matrix(S roll, S pitch, S yaw) {
    return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

template <class S> Mat3<S> euler_to_matrix(const Vec3<S>& rpy) {
    return euler_to_matrix(rpy.x(), rpy.y(), rpy.z());
}

/// Inverse of euler_to_matrix. At the gimbal singularity (|cos pitch| ~ 0)
/// roll is fixed to 0 and yaw absorbs the remaining rotation.
template <class S> Vec3<S> matrix_to_euler(const Mat3<S>& r) {
    const S sp = -r(2, 0);
    const S cp = std::sqrt(r(2, 1) * r(2, 1) + r(2, 2) * r(2, 2));
    Vec3<S> rpy;
    if (cp < S(1e-9)) {
        rpy.x() = S(0);
        rpy.y() = std::atan2(sp, cp);
        rpy.z() = std::atan2(-r(0, 1), r(1, 1));
    } else {
        rpy.x() = std::atan2(r(2, 1), r(2, 2));
        rpy.y() = std::atan2(sp, cp);
        rpy.z() = std::atan2(r(1, 0), r(0, 0));
    }
    return rpy;
}

/// Wraps an angle to [-pi, pi).
template <class S> S wrap_angle(S a) {
    const S two_pi = S(2) * S(M_PI);
    a = std::fmod(a + S(M_PI), two_pi);
    if (a < S(0)) a += two_pi;
    return a - S(M_PI);
}

} // namespace spatialforge
