#include "spatialforge/qa_oracle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

// Everything here recomputes answers from first principles: closed-form
// rotation entries, homogeneous-matrix inverses and a scanline parity test
// instead of the engine's geometry helpers, so a defect in one path cannot
// hide in the other.

namespace spatialforge {

namespace {

Mat3d rpy_matrix_closed_form(const Vec3d& rpy) {
    const double sr = std::sin(rpy.x()), cr = std::cos(rpy.x());
    const double sp = std::sin(rpy.y()), cp = std::cos(rpy.y());
    const double sy = std::sin(rpy.z()), cy = std::cos(rpy.z());
    Mat3d m;
    m << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
         sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
         -sp, cp * sr, cp * cr;
    return m;
}

Vec3d to_camera_via_inverse(const CameraPose& pose, const Vec3d& p_world) {
    Mat4d t = Mat4d::Identity();
    t.topLeftCorner<3, 3>() = pose.rotation;
    t.topRightCorner<3, 1>() = pose.translation;
    const Mat4d inv = t.inverse();
    Eigen::Vector4d h(p_world.x(), p_world.y(), p_world.z(), 1.0);
    const Eigen::Vector4d q = inv * h;
    return q.head<3>();
}

std::array<Vec3d, 8> corners_closed_form(const ObbBox& box) {
    const Mat3d r = rpy_matrix_closed_form(box.rpy);
    std::array<Vec3d, 8> out;
    int n = 0;
    for (const double sx : {-0.5, 0.5})
        for (const double sy : {-0.5, 0.5})
            for (const double sz : {-0.5, 0.5})
                out[n++] = box.center + r * Vec3d(sx * box.extents.x(), sy * box.extents.y(),
                                                  sz * box.extents.z());
    return out;
}

struct AxisExtents {
    double x, y, z;
};

AxisExtents world_axis_extents(const ObbBox& box) {
    const auto corners = corners_closed_form(box);
    Vec3d lo = corners[0], hi = corners[0];
    for (const auto& c : corners) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    return {hi.x() - lo.x(), hi.y() - lo.y(), hi.z() - lo.z()};
}

const ObbBox& box_of(const Scene& scene, const std::string& object_id) {
    const ObbBox* b = scene.find_box(object_id);
    if (!b) throw EngineError("oracle: unknown object '" + object_id + "'");
    return *b;
}

const Frame& frame_of(const Scene& scene, const std::string& frame_id) {
    const Frame* f = scene.find_frame(frame_id);
    if (!f) throw EngineError("oracle: unknown frame '" + frame_id + "'");
    return *f;
}

const QaAnchor& anchor_with_label(const QaRecord& r, const std::string& label) {
    for (const auto& a : r.anchors)
        if (a.marker_label == label) return a;
    throw EngineError("oracle: record lacks anchor '" + label + "'");
}

double camera_heading_deg(const CameraPose& pose) {
    // world-frame direction of the camera's +Z axis, projected on the floor
    const double fx = pose.rotation(0, 2);
    const double fy = pose.rotation(1, 2);
    return std::atan2(fy, fx) * 180.0 / M_PI;
}

double wrap_deg(double d) {
    while (d > 180.0) d -= 360.0;
    while (d <= -180.0) d += 360.0;
    return d;
}

// Parses "(x, y) and (x, y)" out of the traversability question text.
bool parse_two_points(const std::string& text, Vec2d& a, Vec2d& b) {
    double vals[4];
    int found = 0;
    for (std::size_t i = 0; i < text.size() && found < 4; ++i) {
        if (text[i] != '(') continue;
        double x, y;
        if (std::sscanf(text.c_str() + i, "(%lf, %lf)", &x, &y) == 2) {
            vals[found++] = x;
            vals[found++] = y;
        }
    }
    if (found != 4) return false;
    a = Vec2d(vals[0], vals[1]);
    b = Vec2d(vals[2], vals[3]);
    return true;
}

// Scanline parity membership: odd number of polygon edge crossings to the
// left of the point.
bool inside_footprint(const std::vector<Vec2d>& poly, const Vec2d& p) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2d& a = poly[i];
        const Vec2d& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (x > p.x()) inside = !inside;
        }
    }
    return inside;
}

std::string traversability_oracle(const QaRecord& r, const Scene& scene,
                                  const QaConfig& config) {
    Vec2d pa, pb;
    if (!parse_two_points(r.question, pa, pb))
        throw EngineError("oracle: cannot parse positions from traversability question");

    // same discretization contract as generation, independent rasterizer
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    std::vector<std::vector<Vec2d>> polys;
    for (const auto& box : scene.boxes) {
        const auto corners = corners_closed_form(box);
        std::vector<Vec2d> quad;
        for (int i : {0, 1, 3, 2}) { // bottom face ring (z sign fixed)
            quad.emplace_back(corners[i * 2].x(), corners[i * 2].y());
        }
        for (const auto& c : corners) {
            min_x = std::min(min_x, c.x());
            min_y = std::min(min_y, c.y());
            max_x = std::max(max_x, c.x());
            max_y = std::max(max_y, c.y());
        }
        polys.push_back(std::move(quad));
    }
    if (polys.empty()) {
        min_x = min_y = -1.0;
        max_x = max_y = 1.0;
    }
    const double res = config.grid_resolution;
    const double pad = config.grid_padding;
    const double x0 = std::floor((min_x - pad) / res) * res;
    const double y0 = std::floor((min_y - pad) / res) * res;
    const int nx = int(std::ceil((max_x + pad - x0) / res)) + 1;
    const int ny = int(std::ceil((max_y + pad - y0) / res)) + 1;

    auto blocked = [&](int ix, int iy) {
        const Vec2d c(x0 + (ix + 0.5) * res, y0 + (iy + 0.5) * res);
        for (const auto& poly : polys)
            if (inside_footprint(poly, c)) return true;
        return false;
    };
    auto cell = [&](const Vec2d& p) {
        return std::pair<int, int>(int(std::floor((p.x() - x0) / res)),
                                   int(std::floor((p.y() - y0) / res)));
    };
    const auto [ax, ay] = cell(pa);
    const auto [bx, by] = cell(pb);
    if (ax < 0 || ay < 0 || ax >= nx || ay >= ny || blocked(ax, ay)) return "no";
    if (bx < 0 || by < 0 || bx >= nx || by >= ny || blocked(bx, by)) return "no";

    // iterative depth-first search (the generator uses breadth-first)
    std::vector<std::uint8_t> seen(std::size_t(nx) * ny, 0);
    std::vector<std::pair<int, int>> stack = {{ax, ay}};
    seen[std::size_t(ay) * nx + ax] = 1;
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        if (x == bx && y == by) return "yes";
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int qx = x + dx[d], qy = y + dy[d];
            if (qx < 0 || qy < 0 || qx >= nx || qy >= ny) continue;
            const std::size_t idx = std::size_t(qy) * nx + qx;
            if (seen[idx] || blocked(qx, qy)) continue;
            seen[idx] = 1;
            stack.emplace_back(qx, qy);
        }
    }
    return "no";
}

} // namespace

std::string answer_oracle(const QaRecord& record, const Scene& scene,
                          const ObjectFrameIndex& index, const QaConfig& config) {
    const std::string& t = record.template_id;

    if (t == "sm_height" || t == "sm_width" || t == "sm_length") {
        const ObbBox& box = box_of(scene, anchor_with_label(record, "A").object_id);
        const AxisExtents e = world_axis_extents(box);
        const double value = t == "sm_height" ? e.z
                           : t == "sm_width" ? std::min(e.x, e.y)
                                             : std::max(e.x, e.y);
        return format_meters(value, config.round_decimals);
    }
    if (t == "sm_distance_objects") {
        const ObbBox& a = box_of(scene, anchor_with_label(record, "A").object_id);
        const ObbBox& b = box_of(scene, anchor_with_label(record, "B").object_id);
        return format_meters((a.center - b.center).norm(), config.round_decimals);
    }
    if (t == "sm_distance_camera") {
        const ObbBox& a = box_of(scene, anchor_with_label(record, "A").object_id);
        const Frame& f = frame_of(scene, record.image_refs.at(0));
        return format_meters((a.center - f.pose.translation).norm(), config.round_decimals);
    }
    if (t == "sr_direction") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const QaAnchor& ab = anchor_with_label(record, "B");
        const Frame& f = frame_of(scene, aa.frame_id);
        const Vec3d ca = to_camera_via_inverse(f.pose, box_of(scene, aa.object_id).center);
        const Vec3d cb = to_camera_via_inverse(f.pose, box_of(scene, ab.object_id).center);
        const double dx = cb.x() - ca.x();
        const double dz = cb.z() - ca.z();
        const bool lat_ok = std::abs(dx) > config.margins.lateral;
        const bool dep_ok = std::abs(dz) > config.margins.depth;
        if (!lat_ok && !dep_ok) throw EngineError("oracle: sr_direction fails both margins");
        if (lat_ok && (!dep_ok || std::abs(dx) >= std::abs(dz)))
            return dx > 0 ? "left" : "right";
        return dz > 0 ? "front" : "behind";
    }
    if (t == "sr_closer_camera") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const QaAnchor& ab = anchor_with_label(record, "B");
        const Frame& f = frame_of(scene, aa.frame_id);
        const double da = (box_of(scene, aa.object_id).center - f.pose.translation).norm();
        const double db = (box_of(scene, ab.object_id).center - f.pose.translation).norm();
        return da < db ? "A" : "B";
    }
    if (t == "sr_size_comparison") {
        const ObbBox& a = box_of(scene, anchor_with_label(record, "A").object_id);
        const ObbBox& b = box_of(scene, anchor_with_label(record, "B").object_id);
        const double va = a.extents.x() * a.extents.y() * a.extents.z();
        const double vb = b.extents.x() * b.extents.y() * b.extents.z();
        if (std::max(va, vb) / std::min(va, vb) < config.tie_ratio)
            throw EngineError("oracle: sr_size_comparison is a tie");
        return va > vb ? "A" : "B";
    }
    if (t == "sr_vertical") {
        const ObbBox& a = box_of(scene, anchor_with_label(record, "A").object_id);
        const ObbBox& b = box_of(scene, anchor_with_label(record, "B").object_id);
        return a.center.z() > b.center.z() ? "above" : "below";
    }
    if (t == "cp_bearing") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const Frame& f = frame_of(scene, aa.frame_id);
        const Vec3d c = to_camera_via_inverse(f.pose, box_of(scene, aa.object_id).center);
        if (!(c.z() > 0)) throw EngineError("oracle: cp_bearing anchor behind camera");
        const double u = f.intrinsics.fx * c.x() / c.z() + f.intrinsics.cx;
        const double du = u - f.intrinsics.cx;
        if (std::abs(du) <= config.bearing_margin_px) return "center";
        return du < 0 ? "left" : "right";
    }
    if (t == "cp_distance_class") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const Frame& f = frame_of(scene, aa.frame_id);
        const double d = (box_of(scene, aa.object_id).center - f.pose.translation).norm();
        if (d < config.near_max) return "near";
        if (d < config.mid_max) return "mid";
        return "far";
    }
    if (t == "cp_rotation") {
        const Frame& fa = frame_of(scene, record.image_refs.at(0));
        const Frame& fb = frame_of(scene, record.image_refs.at(1));
        const double delta = wrap_deg(camera_heading_deg(fb.pose) - camera_heading_deg(fa.pose));
        if (std::abs(delta) < config.rotation_none_max_deg) return "none";
        return delta > 0 ? "left" : "right";
    }
    if (t == "cp_motion") {
        const Frame& fa = frame_of(scene, record.image_refs.at(0));
        const Frame& fb = frame_of(scene, record.image_refs.at(1));
        const Vec3d dt = fb.pose.translation - fa.pose.translation;
        if (dt.norm() < 0.05) return "stationary";
        // solve R_a * d = dt instead of multiplying by the transpose
        const Vec3d d = fa.pose.rotation.colPivHouseholderQr().solve(dt);
        const double ax = std::abs(d.x()), ay = std::abs(d.y()), az = std::abs(d.z());
        if (az >= ax && az >= ay) return d.z() > 0 ? "forward" : "backward";
        if (ax >= ay) return d.x() > 0 ? "right" : "left";
        return d.y() > 0 ? "down" : "up";
    }
    if (t == "mc_reidentification") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        for (const auto& a : record.anchors)
            if (a.marker_label != "A" && a.object_id == aa.object_id) return a.marker_label;
        throw EngineError("oracle: true candidate missing from re-identification anchors");
    }
    if (t == "mc_shared_count") {
        int shared = 0;
        for (const auto& [object_id, frames] : index.forward)
            if (index.is_visible(object_id, record.image_refs.at(0)) &&
                index.is_visible(object_id, record.image_refs.at(1)))
                ++shared;
        return std::to_string(shared);
    }
    if (t == "mc_presence") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        return index.is_visible(aa.object_id, record.image_refs.at(1)) ? "yes" : "no";
    }
    if (t == "sar_nearest") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const Vec3d anchor_center = box_of(scene, aa.object_id).center;
        std::string best_label;
        double best = 1e300;
        for (const auto& a : record.anchors) {
            if (a.marker_label == "A") continue;
            const double d = (box_of(scene, a.object_id).center - anchor_center).norm();
            if (d < best) {
                best = d;
                best_label = a.marker_label;
            }
        }
        if (best_label.empty()) throw EngineError("oracle: sar_nearest has no candidates");
        return best_label;
    }
    if (t == "sar_category_count") {
        const QaAnchor& aa = anchor_with_label(record, "A");
        const std::string& tag = box_of(scene, aa.object_id).tag;
        int count = 0;
        for (const auto& box : scene.boxes)
            if (box.tag == tag) ++count;
        return std::to_string(count);
    }
    if (t == "sar_order") {
        std::vector<std::pair<double, std::string>> columns;
        for (const auto& a : record.anchors) {
            const Frame& f = frame_of(scene, a.frame_id);
            const Vec3d c = to_camera_via_inverse(f.pose, box_of(scene, a.object_id).center);
            if (!(c.z() > 0)) throw EngineError("oracle: sar_order anchor behind camera");
            columns.emplace_back(f.intrinsics.fx * c.x() / c.z() + f.intrinsics.cx,
                                 a.marker_label);
        }
        std::sort(columns.begin(), columns.end());
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i)
            out += (i ? ", " : "") + columns[i].second;
        return out;
    }
    if (t == "sar_traversability") return traversability_oracle(record, scene, config);

    throw EngineError("oracle: unknown template '" + t + "'");
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json j;
    j["total"] = total;
    j["answer_mismatches"] = answer_mismatches;
    j["anchor_violations"] = anchor_violations;
    j["option_violations"] = option_violations;
    j["oracle_errors"] = oracle_errors;
    j["ok"] = ok();
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < issues.size() && i < 50; ++i)
        out.push_back({{"record_id", issues[i].record_id},
                       {"kind", issues[i].kind},
                       {"detail", issues[i].detail}});
    j["issues"] = std::move(out);
    return j;
}

ValidationReport validate_corpus(const std::vector<QaRecord>& records,
                                 const std::map<std::string, Scene>& scenes,
                                 const std::map<std::string, ObjectFrameIndex>& indices,
                                 const QaConfig& config) {
    ValidationReport report;
    for (const auto& r : records) {
        ++report.total;
        const auto scene_it = scenes.find(r.scene_id);
        const auto index_it = indices.find(r.scene_id);
        if (scene_it == scenes.end() || index_it == indices.end()) {
            ++report.oracle_errors;
            report.issues.push_back({r.record_id, "oracle_error",
                                     "unknown scene '" + r.scene_id + "'"});
            continue;
        }
        const Scene& scene = scene_it->second;
        const ObjectFrameIndex& index = index_it->second;

        for (const auto& a : r.anchors) {
            if (!index.is_visible(a.object_id, a.frame_id)) {
                ++report.anchor_violations;
                report.issues.push_back({r.record_id, "anchor_invisible",
                                         a.object_id + " not visible in " + a.frame_id});
            }
        }
        if (r.is_choice()) {
            const auto hits = std::count(r.options.begin(), r.options.end(), r.answer);
            if (hits != 1) {
                ++report.option_violations;
                report.issues.push_back({r.record_id, "option_rule",
                                         std::to_string(hits) + " options equal the answer"});
            }
        }
        try {
            const std::string expected = answer_oracle(r, scene, index, config);
            if (expected != r.answer) {
                ++report.answer_mismatches;
                report.issues.push_back({r.record_id, "answer_mismatch",
                                         "oracle says '" + expected + "', record says '" +
                                             r.answer + "'"});
            }
        } catch (const std::exception& e) {
            ++report.oracle_errors;
            report.issues.push_back({r.record_id, "oracle_error", e.what()});
        }
    }
    return report;
}

} // namespace spatialforge
