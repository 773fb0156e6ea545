#pragma once

// Shared synthetic fixtures for the test suites.

#include "spatialforge/attributes.hpp"
#include "spatialforge/synthetic.hpp"

#include <string>
#include <vector>

namespace sf_fixtures {

using namespace spatialforge;

inline ObbBox box_at(const std::string& id, const Vec3d& center,
                     const Vec3d& extents = Vec3d(0.4, 0.4, 0.4),
                     const std::string& tag = "object") {
    ObbBox b;
    b.id = id;
    b.tag = tag;
    b.center = center;
    b.extents = extents;
    return b;
}

// 5 objects of 3 categories around the origin, orbit camera.
inline SyntheticSceneSpec cluster_spec(int frame_count,
                                       const std::string& scene_id = "cluster") {
    SyntheticSceneSpec spec;
    spec.scene_id = scene_id;
    spec.boxes = {box_at("crate_0", {0.0, 0.0, 0.5}, {1.0, 1.0, 1.0}, "crate"),
                  box_at("crate_1", {1.4, 1.2, 0.4}, {0.8, 0.8, 0.8}, "crate"),
                  box_at("ball_0", {-1.2, 0.9, 0.3}, {0.6, 0.6, 0.6}, "ball"),
                  box_at("ball_1", {0.9, -1.3, 0.22}, {0.5, 0.5, 0.5}, "ball"),
                  box_at("post_0", {-1.0, -1.1, 1.0}, {0.3, 0.3, 2.0}, "post")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0, 0, 0.5);
    spec.trajectory.radius = 5.0;
    spec.trajectory.height = 1.6;
    spec.trajectory.count = frame_count;
    return spec;
}

inline ExtractConfig synthetic_extract_config() {
    ExtractConfig config;
    config.containment_eps = 1e-5; // float32 depth sits this close to the surface
    config.occupancy_stride = 1;
    return config;
}

struct BuiltScene {
    Scene scene;
    ObjectFrameIndex index;
};

// Renders the spec in memory and runs extraction + indexing.
inline BuiltScene build_in_memory(const SyntheticSceneSpec& spec,
                                  ExtractConfig config = synthetic_extract_config()) {
    BuiltScene out;
    out.scene.scene_id = spec.scene_id;
    out.scene.boxes = spec.boxes;
    std::vector<std::vector<FrameObjectAttributes>> per_frame;
    const auto poses = spec.camera_poses();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        Frame f;
        char fid[32];
        std::snprintf(fid, sizeof(fid), "frame_%04zu", i);
        f.frame_id = fid;
        f.intrinsics = spec.intrinsics();
        f.pose = poses[i];
        out.scene.frames.push_back(f);
        const auto render = render_frame(spec, poses[i]);
        per_frame.push_back(
            filter_and_extract(out.scene, out.scene.frames.back(), render.depth, config));
    }
    out.index = build_index(out.scene, per_frame);
    return out;
}

inline BuiltScene build_cluster(int frame_count) {
    return build_in_memory(cluster_spec(frame_count));
}

} // namespace sf_fixtures
