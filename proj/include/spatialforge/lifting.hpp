#pragma once

#include "spatialforge/adapters.hpp"
#include "spatialforge/scene.hpp"

#include <string>
#include <vector>

namespace spatialforge {

struct LiftConfig {
    int stride = 2;                 // mask pixel sampling stride for back-projection
    int knn_k = 16;                 // statistical outlier filter neighborhood
    double knn_sigma = 2.0;
    double iou_threshold = 0.3;     // AABB IoU gate for cross-view association
    std::size_t min_points = 50;    // groups below this are discarded
    std::size_t max_points_per_detection = 8192;
    double max_depth = 50.0;
    std::uint64_t global_seed = 0;

    bool operator==(const LiftConfig&) const = default;
};

/// One back-projected detection: provenance plus its world-frame point cloud.
struct DetectionCloud {
    std::string frame_id;
    int detection_index = 0;
    std::string tag;
    std::vector<Vec3d> points;
};

struct LiftedInstance {
    std::string instance_id;
    std::string tag; // majority vote over member detections
    std::vector<std::pair<std::string, int>> members; // (frame_id, detection index)
    std::vector<Vec3d> merged_cloud;
    ObbBox fitted_box;
};

struct LiftResult {
    std::vector<LiftedInstance> instances;
    Scene scene; // input frames with the fitted boxes; valid ingest input
};

std::vector<Vec3d> backproject_detection(const Frame& frame, const DepthMap& depth,
                                         const ViewDetection& det, int stride,
                                         double max_depth = 50.0);

/// Statistical filter: drops points whose mean k-NN distance exceeds
/// mu + sigma * stddev of the cloud's distribution.
std::vector<Vec3d> remove_outliers(const std::vector<Vec3d>& cloud, int k, double sigma);

/// Transitive grouping of same-tag detections whose cloud AABBs overlap with
/// 3D IoU >= threshold; merge passes repeat to a fixed point. Input order is
/// canonicalized by (frame_id, detection index), so groups are deterministic.
std::vector<std::vector<std::size_t>> associate_instances(
    const std::vector<DetectionCloud>& clouds, double iou_threshold);

/// Gravity-aligned box fit: minimum-area rectangle of the XY convex hull
/// (rotating calipers) plus the cloud's Z range. Canonical form: roll = pitch
/// = 0, yaw in [-pi/2, pi/2), x extent >= y extent.
ObbBox fit_obb(const std::vector<Vec3d>& cloud);

LiftResult lift_scene(const Scene& scene, DetectionAdapter& adapter, const LiftConfig& config);

double aabb_iou(const Vec3d& lo_a, const Vec3d& hi_a, const Vec3d& lo_b, const Vec3d& hi_b);

/// 3D IoU of two gravity-aligned boxes (XY polygon intersection times Z
/// overlap); used to score lifted boxes against ground truth.
double obb_iou_gravity_aligned(const ObbBox& a, const ObbBox& b);

} // namespace spatialforge
