#pragma once

#include "spatialforge/mask.hpp"
#include "spatialforge/rotations.hpp"
#include "spatialforge/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spatialforge {

/// World-frame oriented bounding box, the engine's core primitive:
/// (x, y, z) center, (x_l, y_l, z_l) full side lengths, roll/pitch/yaw.
/// All world quantities in meters, Z-up.
struct ObbBox {
    std::string id;
    std::string tag;
    Vec3d center = Vec3d::Zero();
    Vec3d extents = Vec3d::Ones();
    Vec3d rpy = Vec3d::Zero(); // roll, pitch, yaw in radians
    bool metric = true;

    Mat3d rotation() const { return euler_to_matrix(rpy); }
    double volume() const { return extents.x() * extents.y() * extents.z(); }

    /// Normalizes yaw to [-pi, pi) and checks extents/rotation; throws InputError.
    void validate_and_normalize(const std::string& where);
};

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate(const std::string& where) const;
};

/// Rigid camera pose stored camera-to-world; the world-to-camera direction is
/// always derived, never stored.
struct CameraPose {
    Mat3d rotation = Mat3d::Identity(); // camera-to-world
    Vec3d translation = Vec3d::Zero();  // camera origin in world frame

    void validate(const std::string& where) const;
};

enum class DepthFormat { Png16Millimeters, Float32Raw };

struct Frame {
    std::string frame_id;
    std::string image_ref;
    std::string depth_ref;
    DepthFormat depth_format = DepthFormat::Png16Millimeters;
    CameraIntrinsics intrinsics;
    CameraPose pose;
    std::optional<double> timestamp;
};

/// Per-pixel metric depth along the camera ray Z. Value 0 marks invalid.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> values; // meters, row-major

    float at(int u, int v) const { return values[std::size_t(v) * width + u]; }
    bool valid(int u, int v, double max_range) const {
        const float d = at(u, v);
        return d > 0.0f && d <= max_range;
    }
};

struct Scene {
    std::string scene_id;
    std::string units = "m";
    std::string source_tag;
    std::string base_dir; // directory of the manifest; file refs resolve against it
    bool depth_metric = true; // whether the depth source reflects real-world scale
    std::vector<Frame> frames;
    std::vector<ObbBox> boxes;

    const Frame* find_frame(const std::string& frame_id) const;
    const ObbBox* find_box(const std::string& box_id) const;
    std::string resolve_path(const std::string& ref) const;

    void validate(); // normalizes boxes, checks uniqueness and invariants
};

} // namespace spatialforge
