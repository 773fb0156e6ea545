#include "spatialforge/scene_graph.hpp"

#include "spatialforge/geometry.hpp"

#include <cmath>

namespace spatialforge {

const char* relation_name(Relation r) {
    switch (r) {
    case Relation::LeftOf: return "left";
    case Relation::RightOf: return "right";
    case Relation::InFrontOf: return "front";
    case Relation::Behind: return "behind";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
    }
    return "?";
}

Relation relation_inverse(Relation r) {
    switch (r) {
    case Relation::LeftOf: return Relation::RightOf;
    case Relation::RightOf: return Relation::LeftOf;
    case Relation::InFrontOf: return Relation::Behind;
    case Relation::Behind: return Relation::InFrontOf;
    case Relation::Above: return Relation::Below;
    case Relation::Below: return Relation::Above;
    }
    return r;
}

std::vector<RelationEdge> pairwise_relation(const CameraPose& pose, const ObbBox& a,
                                            const ObbBox& b, const RelationMargins& margins) {
    std::vector<RelationEdge> edges;
    const Vec3d ca = world_to_camera(pose, a.center);
    const Vec3d cb = world_to_camera(pose, b.center);

    const double dx = cb.x() - ca.x(); // camera +X is right
    if (std::abs(dx) > margins.lateral) {
        const Relation r = dx > 0 ? Relation::LeftOf : Relation::RightOf;
        edges.push_back({a.id, r, b.id, std::abs(dx)});
        edges.push_back({b.id, relation_inverse(r), a.id, std::abs(dx)});
    }
    const double dz = cb.z() - ca.z(); // camera +Z is depth
    if (std::abs(dz) > margins.depth) {
        const Relation r = dz > 0 ? Relation::InFrontOf : Relation::Behind;
        edges.push_back({a.id, r, b.id, std::abs(dz)});
        edges.push_back({b.id, relation_inverse(r), a.id, std::abs(dz)});
    }
    const double dw = a.center.z() - b.center.z(); // world Z is up
    if (std::abs(dw) > margins.vertical) {
        const Relation r = dw > 0 ? Relation::Above : Relation::Below;
        edges.push_back({a.id, r, b.id, std::abs(dw)});
        edges.push_back({b.id, relation_inverse(r), a.id, std::abs(dw)});
    }
    return edges;
}

WorldExtents world_extents(const ObbBox& box) {
    const auto corners = obb_corners(box);
    Vec3d lo = corners[0], hi = corners[0];
    for (const auto& c : corners) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    const Vec3d e = hi - lo;
    WorldExtents w;
    w.height = e.z();
    w.length = std::max(e.x(), e.y());
    w.width = std::min(e.x(), e.y());
    return w;
}

namespace {

void rank(double va, double vb, double tie_ratio, CompareWinner& winner, double& ratio) {
    const double hi = std::max(va, vb), lo = std::min(va, vb);
    ratio = lo > 0 ? hi / lo : 1.0;
    if (ratio < tie_ratio)
        winner = CompareWinner::Comparable;
    else
        winner = va > vb ? CompareWinner::First : CompareWinner::Second;
}

} // namespace

AttributeComparison compare_attributes(const ObbBox& a, const ObbBox& b, double tie_ratio) {
    AttributeComparison cmp;
    cmp.non_metric = !(a.metric && b.metric);
    rank(a.volume(), b.volume(), tie_ratio, cmp.larger_volume, cmp.volume_ratio);
    const WorldExtents wa = world_extents(a), wb = world_extents(b);
    rank(wa.height, wb.height, tie_ratio, cmp.taller, cmp.height_ratio);
    rank(wa.width, wb.width, tie_ratio, cmp.wider, cmp.width_ratio);
    rank(wa.length, wb.length, tie_ratio, cmp.longer, cmp.length_ratio);
    return cmp;
}

SceneGraph build_frame_graph(const Scene& scene, const ObjectFrameIndex& index,
                             const Frame& frame, const RelationMargins& margins) {
    if (index.reverse.find(frame.frame_id) == index.reverse.end())
        throw EngineError("frame '" + frame.frame_id + "' is not indexed");

    SceneGraph graph;
    graph.frame_id = frame.frame_id;
    for (const auto& object_id : index.visible_objects(frame.frame_id)) {
        const ObbBox* box = scene.find_box(object_id);
        const FrameObjectAttributes* attrs = index.find(object_id, frame.frame_id);
        if (!box || !attrs) continue;
        GraphNode node;
        node.object_id = object_id;
        node.tag = box->tag;
        node.box3d = *box;
        node.box2d = attrs->box2d;
        node.has_mask = attrs->coarse_mask.count_on() > 0 || attrs->refined_mask.has_value();
        node.camera_center = world_to_camera(frame.pose, box->center);
        node.camera_distance = (box->center - frame.pose.translation).norm();
        node.metric = box->metric;
        graph.nodes.emplace(object_id, std::move(node));
    }
    for (auto it = graph.nodes.begin(); it != graph.nodes.end(); ++it) {
        auto jt = it;
        for (++jt; jt != graph.nodes.end(); ++jt) {
            auto edges = pairwise_relation(frame.pose, it->second.box3d, jt->second.box3d, margins);
            graph.edges.insert(graph.edges.end(), edges.begin(), edges.end());
        }
    }
    return graph;
}

const char* motion_name(MotionClass m) {
    switch (m) {
    case MotionClass::Forward: return "forward";
    case MotionClass::Backward: return "backward";
    case MotionClass::Left: return "left";
    case MotionClass::Right: return "right";
    case MotionClass::Up: return "up";
    case MotionClass::Down: return "down";
    case MotionClass::Stationary: return "stationary";
    }
    return "?";
}

RelativePose relative_camera_pose(const Frame& frame_a, const Frame& frame_b,
                                  double stationary_threshold) {
    RelativePose rel;
    // Heading change about world Z, read off the camera forward axes projected
    // onto the world XY plane.
    const Vec3d fa = frame_a.pose.rotation.col(2);
    const Vec3d fb = frame_b.pose.rotation.col(2);
    const double yaw_a = std::atan2(fa.y(), fa.x());
    const double yaw_b = std::atan2(fb.y(), fb.x());
    double delta = (yaw_b - yaw_a) * 180.0 / M_PI;
    while (delta > 180.0) delta -= 360.0;
    while (delta <= -180.0) delta += 360.0;
    rel.yaw_delta_deg = delta;

    rel.translation = frame_b.pose.translation - frame_a.pose.translation;
    rel.camera_motion = frame_a.pose.rotation.transpose() * rel.translation;
    if (rel.translation.norm() < stationary_threshold) {
        rel.motion = MotionClass::Stationary;
        return rel;
    }
    const Vec3d& d = rel.camera_motion;
    const double ax = std::abs(d.x()), ay = std::abs(d.y()), az = std::abs(d.z());
    if (az >= ax && az >= ay)
        rel.motion = d.z() > 0 ? MotionClass::Forward : MotionClass::Backward;
    else if (ax >= ay)
        rel.motion = d.x() > 0 ? MotionClass::Right : MotionClass::Left;
    else
        rel.motion = d.y() > 0 ? MotionClass::Down : MotionClass::Up;
    return rel;
}

MultiViewGraph merge_multiview(const Scene& scene, const ObjectFrameIndex& index,
                               const Frame& frame_a, const Frame& frame_b,
                               const RelationMargins& margins) {
    MultiViewGraph mv;
    mv.frame_a = frame_a.frame_id;
    mv.frame_b = frame_b.frame_id;
    mv.graph_a = build_frame_graph(scene, index, frame_a, margins);
    mv.graph_b = build_frame_graph(scene, index, frame_b, margins);
    for (const auto& [id, node] : mv.graph_a.nodes)
        if (mv.graph_b.nodes.count(id)) mv.shared_ids.insert(id);
    mv.relative_pose = relative_camera_pose(frame_a, frame_b);
    return mv;
}

} // namespace spatialforge
