#include "spatialforge/attributes.hpp"

#include "spatialforge/image_io.hpp"
#include "spatialforge/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace spatialforge {

using nlohmann::json;

OccupancySample occupancy_ratio(const Frame& frame, const DepthMap& depth, const ObbBox& box,
                                const ProjectedBox2d& region, int stride,
                                double containment_eps, double max_depth) {
    OccupancySample out;
    if (stride < 1) throw EngineError("occupancy_ratio: stride must be >= 1");
    const auto& k = frame.intrinsics;
    const int u0 = std::max(0, int(std::floor(region.min_u)));
    const int v0 = std::max(0, int(std::floor(region.min_v)));
    const int u1 = std::min(k.width - 1, int(std::floor(region.max_u)));
    const int v1 = std::min(k.height - 1, int(std::floor(region.max_v)));

    const Mat3d cam_to_world = frame.pose.rotation;
    const Mat3d box_rot_t = box.rotation().transpose();
    const Vec3d half = 0.5 * box.extents;

    for (int v = v0; v <= v1; v += stride) {
        for (int u = u0; u <= u1; u += stride) {
            if (!depth.valid(u, v, max_depth)) continue;
            ++out.valid_count;
            const double z = depth.at(u, v);
            const Vec3d p_cam((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z);
            const Vec3d p_world = cam_to_world * p_cam + frame.pose.translation;
            const Vec3d local = box_rot_t * (p_world - box.center);
            if (std::abs(local.x()) <= half.x() + containment_eps &&
                std::abs(local.y()) <= half.y() + containment_eps &&
                std::abs(local.z()) <= half.z() + containment_eps) {
                ++out.inside_count;
                out.inside_pixels.emplace_back(u, v);
                out.inside_points.push_back(p_world);
            }
        }
    }
    out.ratio = out.valid_count > 0 ? double(out.inside_count) / out.valid_count : 0.0;
    return out;
}

std::vector<FrameObjectAttributes> filter_and_extract(const Scene& scene, const Frame& frame,
                                                      const DepthMap& depth,
                                                      const ExtractConfig& config) {
    std::vector<FrameObjectAttributes> out;
    const auto& k = frame.intrinsics;
    for (const auto& box : scene.boxes) {
        if (frustum_test(k, frame.pose, box) == FrustumResult::Outside) continue;

        FrameObjectAttributes rec;
        rec.object_id = box.id;
        rec.frame_id = frame.frame_id;
        rec.tag = box.tag;
        rec.metric = box.metric;
        rec.box2d = project_obb(k, frame.pose, box);

        const auto ratio_sample = occupancy_ratio(frame, depth, box, rec.box2d,
                                                  config.occupancy_stride,
                                                  config.containment_eps, config.max_depth);
        rec.occupancy = ratio_sample.ratio;
        rec.visible = rec.occupancy >= config.tau;

        // Masks and clouds are sampled at mask_stride (default 1) regardless
        // of the ratio's stride.
        const auto& dense = config.mask_stride == config.occupancy_stride
                                ? ratio_sample
                                : occupancy_ratio(frame, depth, box, rec.box2d,
                                                  config.mask_stride, config.containment_eps,
                                                  config.max_depth);
        std::vector<std::uint8_t> bits(std::size_t(k.width) * k.height, 0);
        for (const auto& [u, v] : dense.inside_pixels) bits[std::size_t(v) * k.width + u] = 1;
        rec.coarse_mask = InstanceMask::from_bits(k.width, k.height, bits);

        std::mt19937_64 rng(derive_seed(config.global_seed,
                                        {scene.scene_id, frame.frame_id, box.id, "cloud"}));
        rec.partial_cloud = reservoir_sample(dense.inside_points, config.cloud_cap, rng);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<FrameObjectAttributes> filter_and_extract(const Scene& scene, const Frame& frame,
                                                      const ExtractConfig& config) {
    const DepthMap depth = load_depth(scene.resolve_path(frame.depth_ref), frame.depth_format,
                                      frame.intrinsics.width, frame.intrinsics.height);
    return filter_and_extract(scene, frame, depth, config);
}

const FrameObjectAttributes* ObjectFrameIndex::find(const std::string& object_id,
                                                    const std::string& frame_id) const {
    auto it = forward.find(object_id);
    if (it == forward.end()) return nullptr;
    auto jt = it->second.find(frame_id);
    return jt == it->second.end() ? nullptr : &jt->second;
}

std::vector<std::string> ObjectFrameIndex::visible_objects(const std::string& frame_id) const {
    auto it = reverse.find(frame_id);
    if (it == reverse.end()) return {};
    return {it->second.begin(), it->second.end()};
}

bool ObjectFrameIndex::is_visible(const std::string& object_id,
                                  const std::string& frame_id) const {
    auto it = reverse.find(frame_id);
    return it != reverse.end() && it->second.count(object_id) > 0;
}

ObjectFrameIndex build_index(const Scene& scene,
                             const std::vector<std::vector<FrameObjectAttributes>>& per_frame) {
    ObjectFrameIndex index;
    index.scene_id = scene.scene_id;
    for (const auto& box : scene.boxes) index.forward[box.id]; // retain zero-visibility objects
    for (const auto& frame : scene.frames) index.reverse[frame.frame_id];
    for (const auto& frame_attrs : per_frame) {
        for (const auto& rec : frame_attrs) {
            auto& slot = index.forward[rec.object_id];
            if (!slot.emplace(rec.frame_id, rec).second)
                throw EngineError("duplicate attribute record for object '" + rec.object_id +
                                  "' in frame '" + rec.frame_id + "'");
            if (rec.visible) index.reverse[rec.frame_id].insert(rec.object_id);
        }
    }
    return index;
}

namespace {

json box2d_to_json(const ProjectedBox2d& b) {
    return json{{"min_u", b.min_u}, {"min_v", b.min_v}, {"max_u", b.max_u}, {"max_v", b.max_v},
                {"clipped", b.clipped}, {"visible_corner_count", b.visible_corner_count}};
}

ProjectedBox2d box2d_from_json(const json& j) {
    ProjectedBox2d b;
    b.min_u = j.at("min_u").get<double>();
    b.min_v = j.at("min_v").get<double>();
    b.max_u = j.at("max_u").get<double>();
    b.max_v = j.at("max_v").get<double>();
    b.clipped = j.at("clipped").get<bool>();
    b.visible_corner_count = j.at("visible_corner_count").get<int>();
    return b;
}

json mask_to_json(const InstanceMask& m) {
    return json{{"width", m.width}, {"height", m.height}, {"rle", m.runs}};
}

InstanceMask mask_from_json(const json& j) {
    InstanceMask m;
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.runs = j.at("rle").get<std::vector<std::uint32_t>>();
    m.validate();
    return m;
}

} // namespace

json attributes_to_json(const FrameObjectAttributes& a) {
    json j;
    j["object_id"] = a.object_id;
    j["frame_id"] = a.frame_id;
    j["tag"] = a.tag;
    j["metric"] = a.metric;
    j["box2d"] = box2d_to_json(a.box2d);
    j["occupancy"] = a.occupancy;
    j["visible"] = a.visible;
    j["coarse_mask"] = mask_to_json(a.coarse_mask);
    if (a.refined_mask) j["refined_mask"] = mask_to_json(*a.refined_mask);
    j["refinement_failed"] = a.refinement_failed;
    json cloud = json::array();
    for (const auto& p : a.partial_cloud) cloud.push_back({p.x(), p.y(), p.z()});
    j["partial_cloud"] = std::move(cloud);
    return j;
}

FrameObjectAttributes attributes_from_json(const json& j) {
    FrameObjectAttributes a;
    a.object_id = j.at("object_id").get<std::string>();
    a.frame_id = j.at("frame_id").get<std::string>();
    a.tag = j.at("tag").get<std::string>();
    a.metric = j.at("metric").get<bool>();
    a.box2d = box2d_from_json(j.at("box2d"));
    a.occupancy = j.at("occupancy").get<double>();
    a.visible = j.at("visible").get<bool>();
    a.coarse_mask = mask_from_json(j.at("coarse_mask"));
    if (j.contains("refined_mask")) a.refined_mask = mask_from_json(j.at("refined_mask"));
    a.refinement_failed = j.value("refinement_failed", false);
    for (const auto& p : j.at("partial_cloud"))
        a.partial_cloud.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    return a;
}

json index_to_json(const ObjectFrameIndex& index) {
    json j;
    j["scene_id"] = index.scene_id;
    json fwd = json::object();
    for (const auto& [obj, frames] : index.forward) {
        json per_frame = json::object();
        for (const auto& [fid, rec] : frames) per_frame[fid] = attributes_to_json(rec);
        fwd[obj] = std::move(per_frame);
    }
    j["objects"] = std::move(fwd);
    json rev = json::object();
    for (const auto& [fid, objs] : index.reverse) rev[fid] = objs;
    j["visible_by_frame"] = std::move(rev);
    return j;
}

} // namespace spatialforge
