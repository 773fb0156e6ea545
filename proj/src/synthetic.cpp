#include "spatialforge/synthetic.hpp"

#include "spatialforge/manifest.hpp"
#include "spatialforge/mask.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace spatialforge {

using nlohmann::json;

CameraPose look_at_pose(const Vec3d& eye, const Vec3d& target) {
    Vec3d forward = target - eye;
    if (forward.norm() < 1e-12) forward = Vec3d(1, 0, 0);
    forward.normalize();
    Vec3d right = forward.cross(Vec3d(0, 0, 1));
    if (right.norm() < 1e-9) right = Vec3d(1, 0, 0); // looking straight up/down
    right.normalize();
    const Vec3d down = forward.cross(right);
    CameraPose pose;
    pose.rotation.col(0) = right;
    pose.rotation.col(1) = down;
    pose.rotation.col(2) = forward;
    pose.translation = eye;
    return pose;
}

std::vector<CameraPose> SyntheticSceneSpec::camera_poses() const {
    std::vector<CameraPose> out;
    const auto& t = trajectory;
    switch (t.kind) {
    case Trajectory::Kind::Orbit:
        for (int i = 0; i < t.count; ++i) {
            const double a = (t.start_deg + t.sweep_deg * i / std::max(1, t.count)) * M_PI / 180.0;
            const Vec3d eye = t.target + Vec3d(t.radius * std::cos(a), t.radius * std::sin(a),
                                               t.height - t.target.z());
            out.push_back(look_at_pose(eye, t.target));
        }
        break;
    case Trajectory::Kind::Line:
        for (int i = 0; i < t.count; ++i) {
            const double s = t.count > 1 ? double(i) / (t.count - 1) : 0.0;
            out.push_back(look_at_pose(t.start + s * (t.end - t.start), t.look_at));
        }
        break;
    case Trajectory::Kind::Poses:
        out = t.poses;
        break;
    }
    return out;
}

namespace {

struct LocalBox {
    Mat3d rot_t; // world-to-local
    Vec3d center;
    Vec3d half;
};

LocalBox make_local(const ObbBox& b) {
    return LocalBox{b.rotation().transpose(), b.center, 0.5 * b.extents};
}

// Slab intersection in the box's local frame; returns the entry parameter s
// along the unnormalized pixel ray (so s equals camera-ray Z depth), or -1.
double intersect(const LocalBox& box, const Vec3d& origin, const Vec3d& dir, double max_depth) {
    const Vec3d o = box.rot_t * (origin - box.center);
    const Vec3d d = box.rot_t * dir;
    double t0 = 1e-9, t1 = max_depth;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-14) {
            if (std::abs(o[a]) > box.half[a]) return -1.0;
            continue;
        }
        double lo = (-box.half[a] - o[a]) / d[a];
        double hi = (box.half[a] - o[a]) / d[a];
        if (lo > hi) std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (t0 > t1) return -1.0;
    }
    return t0;
}

const std::array<std::array<std::uint8_t, 3>, 10> kPalette = {{{204, 92, 74},
                                                               {84, 160, 205},
                                                               {110, 190, 102},
                                                               {222, 184, 70},
                                                               {150, 110, 200},
                                                               {90, 200, 180},
                                                               {220, 130, 180},
                                                               {160, 160, 90},
                                                               {120, 140, 220},
                                                               {200, 150, 110}}};

} // namespace

double ray_box_depth(const CameraIntrinsics& k, const CameraPose& pose, const ObbBox& box,
                     int u, int v, double max_depth) {
    const Vec3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    const Vec3d dir_world = pose.rotation * dir_cam;
    return intersect(make_local(box), pose.translation, dir_world, max_depth);
}

RenderResult render_frame(const SyntheticSceneSpec& spec, const CameraPose& pose) {
    RenderResult r;
    r.depth.width = spec.width;
    r.depth.height = spec.height;
    r.depth.values.assign(std::size_t(spec.width) * spec.height, 0.0f);
    r.instance.assign(std::size_t(spec.width) * spec.height, -1);
    r.rgb.width = spec.width;
    r.rgb.height = spec.height;
    r.rgb.channels = 3;
    r.rgb.pixels.assign(std::size_t(spec.width) * spec.height * 3, 0);

    std::vector<LocalBox> locals;
    locals.reserve(spec.boxes.size() + spec.occluders.size());
    for (const auto& b : spec.boxes) locals.push_back(make_local(b));
    for (const auto& b : spec.occluders) locals.push_back(make_local(b));
    const int n_boxes = int(spec.boxes.size());

    const CameraIntrinsics k = spec.intrinsics();
    for (int v = 0; v < spec.height; ++v) {
        for (int u = 0; u < spec.width; ++u) {
            const Vec3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
            const Vec3d dir_world = pose.rotation * dir_cam;
            double best = spec.max_depth;
            int hit = -1;
            for (std::size_t i = 0; i < locals.size(); ++i) {
                const double s = intersect(locals[i], pose.translation, dir_world, spec.max_depth);
                if (s > 0.0 && s < best) {
                    best = s;
                    hit = int(i);
                }
            }
            const std::size_t idx = std::size_t(v) * spec.width + u;
            std::uint8_t* px = r.rgb.pixels.data() + idx * 3;
            if (hit >= 0) {
                r.depth.values[idx] = float(best);
                r.instance[idx] = hit < n_boxes ? hit : -2 - (hit - n_boxes);
                const auto& base = kPalette[std::size_t(hit) % kPalette.size()];
                // crude depth shading so frames are not flat color fields
                const double shade = std::clamp(1.2 - 0.08 * best, 0.35, 1.0);
                for (int c = 0; c < 3; ++c) px[c] = std::uint8_t(base[c] * shade);
            } else {
                px[0] = px[1] = std::uint8_t(38 + 30 * v / spec.height);
                px[2] = std::uint8_t(48 + 30 * v / spec.height);
            }
        }
    }
    return r;
}

SyntheticSceneSpec SyntheticSceneSpec::from_json(const json& j) {
    SyntheticSceneSpec s;
    s.scene_id = j.value("scene_id", s.scene_id);
    s.source_tag = j.value("source_tag", s.source_tag);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.fx = j.value("fx", s.fx);
    s.fy = j.value("fy", s.fy);
    s.cx = j.value("cx", s.cx);
    s.cy = j.value("cy", s.cy);
    s.max_depth = j.value("max_depth", s.max_depth);
    if (j.value("depth_format", std::string("f32")) == "png16")
        s.depth_format = DepthFormat::Png16Millimeters;
    auto parse_box = [](const json& bj, int i, bool annotated) {
        ObbBox b;
        b.id = bj.value("id", (annotated ? "obj_" : "occ_") + std::to_string(i));
        b.tag = bj.value("tag", std::string("object"));
        auto v3 = [&](const char* key, Vec3d def) {
            if (!bj.contains(key)) return def;
            const auto& a = bj.at(key);
            return Vec3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
        };
        b.center = v3("center", Vec3d::Zero());
        b.extents = v3("extents", Vec3d::Ones());
        b.rpy = v3("rpy", Vec3d::Zero());
        b.metric = bj.value("metric", true);
        return b;
    };
    int i = 0;
    for (const auto& bj : j.value("boxes", json::array())) s.boxes.push_back(parse_box(bj, i++, true));
    i = 0;
    for (const auto& bj : j.value("occluders", json::array()))
        s.occluders.push_back(parse_box(bj, i++, false));

    if (j.contains("trajectory")) {
        const json& tj = j["trajectory"];
        const std::string kind = tj.value("type", std::string("orbit"));
        auto v3 = [&](const char* key, Vec3d def) {
            if (!tj.contains(key)) return def;
            const auto& a = tj.at(key);
            return Vec3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
        };
        if (kind == "orbit") {
            s.trajectory.kind = Trajectory::Kind::Orbit;
            s.trajectory.target = v3("target", Vec3d::Zero());
            s.trajectory.radius = tj.value("radius", 4.0);
            s.trajectory.height = tj.value("height", 1.5);
            s.trajectory.count = tj.value("count", 8);
            s.trajectory.start_deg = tj.value("start_deg", 0.0);
            s.trajectory.sweep_deg = tj.value("sweep_deg", 360.0);
        } else if (kind == "line") {
            s.trajectory.kind = Trajectory::Kind::Line;
            s.trajectory.start = v3("start", Vec3d::Zero());
            s.trajectory.end = v3("end", Vec3d::Zero());
            s.trajectory.look_at = v3("look_at", Vec3d::Zero());
            s.trajectory.count = tj.value("count", 2);
        } else if (kind == "poses") {
            s.trajectory.kind = Trajectory::Kind::Poses;
            for (const auto& pj : tj.at("poses")) {
                CameraPose p;
                const auto& rot = pj.at("rotation");
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[std::size_t(3 * r + c)].get<double>();
                const auto& tr = pj.at("translation");
                p.translation = Vec3d(tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>());
                s.trajectory.poses.push_back(p);
            }
        } else {
            throw InputError("/trajectory/type", "unknown trajectory '" + kind + "'");
        }
    }
    return s;
}

json SyntheticSceneSpec::to_json() const {
    json j;
    j["scene_id"] = scene_id;
    j["source_tag"] = source_tag;
    j["width"] = width;
    j["height"] = height;
    j["fx"] = fx;
    j["fy"] = fy;
    j["cx"] = cx;
    j["cy"] = cy;
    j["max_depth"] = max_depth;
    j["depth_format"] = depth_format == DepthFormat::Png16Millimeters ? "png16" : "f32";
    auto dump_box = [](const ObbBox& b) {
        return json{{"id", b.id},
                    {"tag", b.tag},
                    {"center", {b.center.x(), b.center.y(), b.center.z()}},
                    {"extents", {b.extents.x(), b.extents.y(), b.extents.z()}},
                    {"rpy", {b.rpy.x(), b.rpy.y(), b.rpy.z()}},
                    {"metric", b.metric}};
    };
    j["boxes"] = json::array();
    for (const auto& b : boxes) j["boxes"].push_back(dump_box(b));
    j["occluders"] = json::array();
    for (const auto& b : occluders) j["occluders"].push_back(dump_box(b));
    json tj;
    switch (trajectory.kind) {
    case Trajectory::Kind::Orbit:
        tj = {{"type", "orbit"},
              {"target", {trajectory.target.x(), trajectory.target.y(), trajectory.target.z()}},
              {"radius", trajectory.radius},
              {"height", trajectory.height},
              {"count", trajectory.count},
              {"start_deg", trajectory.start_deg},
              {"sweep_deg", trajectory.sweep_deg}};
        break;
    case Trajectory::Kind::Line:
        tj = {{"type", "line"},
              {"start", {trajectory.start.x(), trajectory.start.y(), trajectory.start.z()}},
              {"end", {trajectory.end.x(), trajectory.end.y(), trajectory.end.z()}},
              {"look_at", {trajectory.look_at.x(), trajectory.look_at.y(), trajectory.look_at.z()}},
              {"count", trajectory.count}};
        break;
    case Trajectory::Kind::Poses: {
        tj["type"] = "poses";
        tj["poses"] = json::array();
        for (const auto& p : trajectory.poses) {
            json rot = json::array();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
            tj["poses"].push_back(
                {{"rotation", rot},
                 {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}});
        }
        break;
    }
    }
    j["trajectory"] = tj;
    return j;
}

Scene generate_synthetic(const SyntheticSceneSpec& spec, const std::string& out_dir,
                         const GenerateOptions& opts) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    Scene scene;
    scene.scene_id = spec.scene_id;
    scene.source_tag = spec.source_tag;
    scene.base_dir = out_dir;
    scene.boxes = spec.boxes;

    const auto poses = spec.camera_poses();
    const bool png16 = spec.depth_format == DepthFormat::Png16Millimeters;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        char fid[32];
        std::snprintf(fid, sizeof(fid), "frame_%04zu", i);
        const auto render = render_frame(spec, poses[i]);

        Frame f;
        f.frame_id = fid;
        f.image_ref = std::string(fid) + ".png";
        f.depth_ref = std::string(fid) + (png16 ? ".depth.png" : ".depth.f32");
        f.depth_format = spec.depth_format;
        f.intrinsics = spec.intrinsics();
        f.pose = poses[i];
        f.timestamp = double(i);

        write_png_u8((fs::path(out_dir) / f.image_ref).string(), render.rgb);
        save_depth((fs::path(out_dir) / f.depth_ref).string(), spec.depth_format, render.depth);

        if (opts.write_detections) {
            json dets;
            dets["frame_id"] = f.frame_id;
            dets["detections"] = json::array();
            for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
                std::vector<std::uint8_t> bits(render.instance.size(), 0);
                std::size_t on = 0;
                for (std::size_t p = 0; p < render.instance.size(); ++p)
                    if (render.instance[p] == int(b)) bits[p] = 1, ++on;
                if (on == 0) continue;
                const auto mask = InstanceMask::from_bits(spec.width, spec.height, bits);
                dets["detections"].push_back({{"tag", spec.boxes[b].tag},
                                              {"confidence", 0.95},
                                              {"mask_rle", mask.runs},
                                              {"width", spec.width},
                                              {"height", spec.height}});
            }
            std::ofstream out(fs::path(out_dir) / (std::string(fid) + ".detections.json"));
            out << dets.dump(2) << "\n";
        }
        if (opts.write_gt_masks) {
            const fs::path mask_dir = fs::path(out_dir) / "gt_masks" / spec.scene_id / f.frame_id;
            fs::create_directories(mask_dir);
            for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
                ImageU8 m;
                m.width = spec.width;
                m.height = spec.height;
                m.channels = 1;
                m.pixels.assign(render.instance.size(), 0);
                std::size_t on = 0;
                for (std::size_t p = 0; p < render.instance.size(); ++p)
                    if (render.instance[p] == int(b)) m.pixels[p] = 255, ++on;
                if (on > 0) write_png_u8((mask_dir / (spec.boxes[b].id + ".png")).string(), m);
            }
        }
        scene.frames.push_back(std::move(f));
    }

    scene.validate();
    save_scene(scene, (fs::path(out_dir) / "manifest.json").string());
    return scene;
}

} // namespace spatialforge
