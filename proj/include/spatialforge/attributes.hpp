#pragma once

#include "spatialforge/geometry.hpp"
#include "spatialforge/mask.hpp"
#include "spatialforge/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace spatialforge {

struct ExtractConfig {
    double tau = 0.25;            // occupancy threshold for the occlusion filter
    int occupancy_stride = 2;     // pixel sampling stride for the ratio
    int mask_stride = 1;          // stride for coarse masks and partial clouds
    double containment_eps = 1e-9;
    double max_depth = 50.0;      // depth validity ceiling in meters
    std::size_t cloud_cap = 4096; // partial cloud size cap (reservoir subsampled)
    std::uint64_t global_seed = 0;

    bool operator==(const ExtractConfig&) const = default;
};

/// One sweep over the projected region: back-projects every sampled
/// valid-depth pixel and tests membership in the 3D box.
struct OccupancySample {
    double ratio = 0.0;   // inside / valid; 0 when no valid pixel was sampled
    int valid_count = 0;
    int inside_count = 0;
    std::vector<std::pair<int, int>> inside_pixels; // (u, v) of sampled inside pixels
    std::vector<Vec3d> inside_points;               // their back-projected world points
};

OccupancySample occupancy_ratio(const Frame& frame, const DepthMap& depth, const ObbBox& box,
                                const ProjectedBox2d& region, int stride,
                                double containment_eps = 1e-9, double max_depth = 50.0);

/// Validated per-(object, frame) record produced by the dual filter.
struct FrameObjectAttributes {
    std::string object_id;
    std::string frame_id;
    std::string tag;
    bool metric = true;
    ProjectedBox2d box2d;
    double occupancy = 0.0;
    bool visible = false;
    InstanceMask coarse_mask;
    std::optional<InstanceMask> refined_mask;
    bool refinement_failed = false;
    std::vector<Vec3d> partial_cloud;

    const InstanceMask& best_mask() const { return refined_mask ? *refined_mask : coarse_mask; }
};

/// Runs filter (1) frustum and filter (2) depth occupancy for every scene box
/// against one frame. Boxes that fail the occupancy threshold are kept with
/// visible=false; only the frustum filter drops records.
std::vector<FrameObjectAttributes> filter_and_extract(const Scene& scene, const Frame& frame,
                                                      const DepthMap& depth,
                                                      const ExtractConfig& config);

/// Overload that loads the frame's depth map from disk.
std::vector<FrameObjectAttributes> filter_and_extract(const Scene& scene, const Frame& frame,
                                                      const ExtractConfig& config);

/// Cross-frame index: forward map object -> frame -> attributes, reverse map
/// frame -> visible object set. Objects with zero visible frames stay in the
/// forward map for statistics.
struct ObjectFrameIndex {
    std::string scene_id;
    std::map<std::string, std::map<std::string, FrameObjectAttributes>> forward;
    std::map<std::string, std::set<std::string>> reverse;

    const FrameObjectAttributes* find(const std::string& object_id,
                                      const std::string& frame_id) const;
    std::vector<std::string> visible_objects(const std::string& frame_id) const;
    bool is_visible(const std::string& object_id, const std::string& frame_id) const;
};

ObjectFrameIndex build_index(const Scene& scene,
                             const std::vector<std::vector<FrameObjectAttributes>>& per_frame);

nlohmann::json attributes_to_json(const FrameObjectAttributes& a);
FrameObjectAttributes attributes_from_json(const nlohmann::json& j);
nlohmann::json index_to_json(const ObjectFrameIndex& index);

} // namespace spatialforge
