#pragma once

#include "spatialforge/geometry.hpp"
#include "spatialforge/image_io.hpp"
#include "spatialforge/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace spatialforge {

/// Camera trajectory for synthetic scenes: an orbit around a target, a linear
/// dolly, or explicit poses.
struct Trajectory {
    enum class Kind { Orbit, Line, Poses } kind = Kind::Orbit;
    // orbit
    Vec3d target = Vec3d::Zero();
    double radius = 4.0;
    double height = 1.5;
    int count = 8;
    double start_deg = 0.0;
    double sweep_deg = 360.0;
    // line
    Vec3d start = Vec3d::Zero();
    Vec3d end = Vec3d::Zero();
    Vec3d look_at = Vec3d::Zero();
    // explicit
    std::vector<CameraPose> poses;
};

/// Test-fixture scene description. Depth is rendered by analytic ray-box
/// intersection (nearest surface per pixel), so rendered depth matches the
/// geometry to float precision. Occluders block depth rays but are not part
/// of the annotation set.
struct SyntheticSceneSpec {
    std::string scene_id = "synthetic";
    std::string source_tag = "synthetic";
    int width = 320, height = 240;
    double fx = 260.0, fy = 260.0, cx = 160.0, cy = 120.0;
    double max_depth = 50.0;
    DepthFormat depth_format = DepthFormat::Float32Raw;
    std::vector<ObbBox> boxes;
    std::vector<ObbBox> occluders;
    Trajectory trajectory;

    CameraIntrinsics intrinsics() const {
        return CameraIntrinsics{fx, fy, cx, cy, width, height};
    }
    std::vector<CameraPose> camera_poses() const;

    static SyntheticSceneSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Camera-to-world pose looking from `eye` toward `target` under the Z-up
/// world and +Z-forward / +X-right / +Y-down camera axes.
CameraPose look_at_pose(const Vec3d& eye, const Vec3d& target);

struct RenderResult {
    DepthMap depth;
    ImageU8 rgb;
    // per pixel: -1 background, >= 0 annotated box index, <= -2 occluder (-2 - k)
    std::vector<int> instance;
};

RenderResult render_frame(const SyntheticSceneSpec& spec, const CameraPose& pose);

/// Analytic entry distance (camera-ray Z) of the pixel ray against one box;
/// negative when the ray misses. Exposed for per-pixel oracle checks.
double ray_box_depth(const CameraIntrinsics& k, const CameraPose& pose, const ObbBox& box,
                     int u, int v, double max_depth);

struct GenerateOptions {
    bool write_detections = false; // per-frame detection JSON from rendered instance masks
    bool write_gt_masks = false;   // per-object mask PNGs for the file-backed refine adapter
};

/// Writes manifest.json, depth maps and RGB frames under out_dir and returns
/// the loadable Scene. The manifest always passes ingest validation.
Scene generate_synthetic(const SyntheticSceneSpec& spec, const std::string& out_dir,
                         const GenerateOptions& opts = {});

} // namespace spatialforge
