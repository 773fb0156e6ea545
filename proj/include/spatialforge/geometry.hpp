#pragma once

#include "spatialforge/scene.hpp"

#include <array>
#include <limits>
#include <optional>

namespace spatialforge {

/// Axis-aligned hull of the visible projected corners of a 3D box, clipped to
/// the continuous image rectangle [0,width)x[0,height).
struct ProjectedBox2d {
    double min_u = 0, min_v = 0, max_u = 0, max_v = 0;
    bool clipped = false; // a corner fell outside the image or behind the camera
    int visible_corner_count = 0;
};

/// Projected pixel with its camera-ray depth.
template <class S> struct Projected {
    S u, v, depth;
};

// Corner enumeration order is the bit pattern over local axes: bit 0 -> +X,
// bit 1 -> +Y, bit 2 -> +Z half-extent sign.
inline std::array<Vec3d, 8> obb_corners(const ObbBox& box) {
    const Mat3d r = box.rotation();
    const Vec3d h = 0.5 * box.extents;
    std::array<Vec3d, 8> corners;
    for (int i = 0; i < 8; ++i) {
        const Vec3d signs((i & 1) ? h.x() : -h.x(),
                          (i & 2) ? h.y() : -h.y(),
                          (i & 4) ? h.z() : -h.z());
        corners[i] = box.center + r * signs;
    }
    return corners;
}

inline Vec3d world_to_camera(const CameraPose& pose, const Vec3d& p_world) {
    return pose.rotation.transpose() * (p_world - pose.translation);
}

inline Vec3d camera_to_world(const CameraPose& pose, const Vec3d& p_cam) {
    return pose.rotation * p_cam + pose.translation;
}

/// Pinhole projection, camera axes +Z forward / +X right / +Y down.
/// Returns nullopt for points at or behind the camera plane; out-of-bounds
/// pixels are returned unclipped.
template <class S>
std::optional<Projected<S>> project_point(const CameraIntrinsics& k, const Vec3<S>& p_cam) {
    if (!(p_cam.z() > S(0))) return std::nullopt;
    return Projected<S>{S(k.fx) * p_cam.x() / p_cam.z() + S(k.cx),
                        S(k.fy) * p_cam.y() / p_cam.z() + S(k.cy),
                        p_cam.z()};
}

template <class S>
Vec3<S> backproject_to_camera(const CameraIntrinsics& k, S u, S v, S depth) {
    return Vec3<S>((u - S(k.cx)) / S(k.fx) * depth,
                   (v - S(k.cy)) / S(k.fy) * depth,
                   depth);
}

inline Vec3d backproject_pixel(const CameraIntrinsics& k, const CameraPose& pose,
                               double u, double v, double depth) {
    if (!(depth > 0.0)) throw EngineError("backproject_pixel: non-positive depth");
    return camera_to_world(pose, backproject_to_camera(k, u, v, depth));
}

/// Membership test in the box's local frame, each axis padded by eps.
inline bool point_in_obb(const ObbBox& box, const Vec3d& p_world, double eps = 1e-9) {
    const Vec3d local = box.rotation().transpose() * (p_world - box.center);
    return std::abs(local.x()) <= 0.5 * box.extents.x() + eps &&
           std::abs(local.y()) <= 0.5 * box.extents.y() + eps &&
           std::abs(local.z()) <= 0.5 * box.extents.z() + eps;
}

enum class FrustumResult { Inside, Partial, Outside };

/// Classifies a box by its 8 projected corners: Inside when every corner is in
/// front of the camera and lands within the image, Outside when none does.
inline FrustumResult frustum_test(const CameraIntrinsics& k, const CameraPose& pose,
                                  const ObbBox& box) {
    int in = 0;
    for (const Vec3d& c : obb_corners(box)) {
        const auto p = project_point(k, Vec3d(world_to_camera(pose, c)));
        if (p && p->u >= 0.0 && p->u < k.width && p->v >= 0.0 && p->v < k.height) ++in;
    }
    if (in == 8) return FrustumResult::Inside;
    if (in == 0) return FrustumResult::Outside;
    return FrustumResult::Partial;
}

/// Axis-aligned hull of the corners in front of the camera, clipped to the
/// image rectangle. Throws EngineError for a fully-outside box.
inline ProjectedBox2d project_obb(const CameraIntrinsics& k, const CameraPose& pose,
                                  const ObbBox& box) {
    ProjectedBox2d out;
    out.min_u = out.min_v = std::numeric_limits<double>::infinity();
    out.max_u = out.max_v = -std::numeric_limits<double>::infinity();
    int in_bounds = 0;
    for (const Vec3d& c : obb_corners(box)) {
        const auto p = project_point(k, Vec3d(world_to_camera(pose, c)));
        if (!p) {
            out.clipped = true;
            continue;
        }
        ++out.visible_corner_count;
        if (p->u < 0.0 || p->u >= k.width || p->v < 0.0 || p->v >= k.height)
            out.clipped = true;
        else
            ++in_bounds;
        out.min_u = std::min(out.min_u, p->u);
        out.max_u = std::max(out.max_u, p->u);
        out.min_v = std::min(out.min_v, p->v);
        out.max_v = std::max(out.max_v, p->v);
    }
    if (in_bounds == 0) // the corner-based frustum classification calls this box outside
        throw EngineError("project_obb: box outside the camera frustum");
    out.min_u = std::max(out.min_u, 0.0);
    out.min_v = std::max(out.min_v, 0.0);
    out.max_u = std::min(out.max_u, double(k.width));
    out.max_v = std::min(out.max_v, double(k.height));
    return out;
}

} // namespace spatialforge
