#pragma once

#include "spatialforge/attributes.hpp"
#include "spatialforge/scene.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace spatialforge {

enum class Relation { LeftOf, RightOf, InFrontOf, Behind, Above, Below };

const char* relation_name(Relation r);
Relation relation_inverse(Relation r);

/// Ambiguity gates: an axis yields a relation only when the center difference
/// exceeds its margin, so answers cannot flip under millimeter noise.
struct RelationMargins {
    double lateral = 0.10;  // camera-frame X, meters
    double depth = 0.10;    // camera-frame Z, meters
    double vertical = 0.05; // world Z, meters

    bool operator==(const RelationMargins&) const = default;
};

struct RelationEdge {
    std::string subject;
    Relation relation;
    std::string object;
    double margin = 0.0; // actual center difference along the deciding axis
};

/// Viewer-centric relations: left/right and front/behind from camera-frame
/// centers, above/below from world Z.
std::vector<RelationEdge> pairwise_relation(const CameraPose& pose, const ObbBox& a,
                                            const ObbBox& b, const RelationMargins& margins);

enum class CompareWinner { First, Second, Comparable };

struct AttributeComparison {
    CompareWinner larger_volume = CompareWinner::Comparable;
    CompareWinner taller = CompareWinner::Comparable;
    CompareWinner wider = CompareWinner::Comparable;
    CompareWinner longer = CompareWinner::Comparable;
    double volume_ratio = 1.0; // always >= 1, winner over loser
    double height_ratio = 1.0;
    double width_ratio = 1.0;
    double length_ratio = 1.0;
    bool non_metric = false; // either box lacks real-world scale
};

/// World-axis size measures of a rotated box, taken over its corners:
/// height = Z extent, length = larger of the X/Y extents, width = smaller.
struct WorldExtents {
    double length = 0, width = 0, height = 0;
};
WorldExtents world_extents(const ObbBox& box);

AttributeComparison compare_attributes(const ObbBox& a, const ObbBox& b,
                                       double tie_ratio = 1.02);

struct GraphNode {
    std::string object_id;
    std::string tag;
    ObbBox box3d;
    ProjectedBox2d box2d;
    bool has_mask = false;
    Vec3d camera_center = Vec3d::Zero(); // box center in the camera frame
    double camera_distance = 0.0;        // Euclidean, meters
    bool metric = true;
};

struct SceneGraph {
    std::string frame_id;
    std::map<std::string, GraphNode> nodes;
    std::vector<RelationEdge> edges;
};

SceneGraph build_frame_graph(const Scene& scene, const ObjectFrameIndex& index,
                             const Frame& frame, const RelationMargins& margins);

enum class MotionClass { Forward, Backward, Left, Right, Up, Down, Stationary };
const char* motion_name(MotionClass m);

struct RelativePose {
    double yaw_delta_deg = 0.0;          // signed change about world Z, (-180, 180]
    Vec3d translation = Vec3d::Zero();   // world-frame camera displacement
    Vec3d camera_motion = Vec3d::Zero(); // the same displacement in frame_a's camera frame
    MotionClass motion = MotionClass::Stationary; // dominant axis of camera_motion
};

RelativePose relative_camera_pose(const Frame& frame_a, const Frame& frame_b,
                                  double stationary_threshold = 0.05);

struct MultiViewGraph {
    std::string frame_a;
    std::string frame_b;
    std::set<std::string> shared_ids;
    SceneGraph graph_a;
    SceneGraph graph_b;
    RelativePose relative_pose;
};

MultiViewGraph merge_multiview(const Scene& scene, const ObjectFrameIndex& index,
                               const Frame& frame_a, const Frame& frame_b,
                               const RelationMargins& margins);

} // namespace spatialforge
