#include "spatialforge/qa_synthesis.hpp"

#include "spatialforge/geometry.hpp"
#include "spatialforge/hull.hpp"
#include "spatialforge/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

namespace spatialforge {

namespace {

constexpr const char* kMarkers = "ABCDEFGHJKLMNPQRSTUVWXYZ";

std::string pick(std::mt19937_64& rng, const std::vector<std::string>& variants) {
    return variants[rng_below(rng, variants.size())];
}

std::string fill(std::string text, const std::vector<std::pair<std::string, std::string>>& slots) {
    for (const auto& [key, value] : slots) {
        std::size_t pos;
        while ((pos = text.find(key)) != std::string::npos) text.replace(pos, key.size(), value);
    }
    return text;
}

QaRecord base_record(Task task, const std::string& subtask, const std::string& template_id,
                     const Scene& scene, std::uint64_t seed) {
    QaRecord r;
    r.task = task;
    r.subtask = subtask;
    r.template_id = template_id;
    r.scene_id = scene.scene_id;
    r.seed = seed;
    return r;
}

/// Numeric choice options: truth plus x{0.5, 0.75, 1.5} distractors. Returns
/// false (caller emits the open-ended form) when any distractor collides with
/// the truth after rounding.
bool make_numeric_options(double truth, int decimals, std::mt19937_64& rng,
                          std::vector<std::string>& options, std::string& answer) {
    answer = format_meters(truth, decimals);
    options = {answer};
    for (const double f : {0.5, 0.75, 1.5}) {
        const std::string d = format_meters(truth * f, decimals);
        if (d == answer) return false;
        for (const auto& prev : options)
            if (prev == d) return false;
        options.push_back(d);
    }
    deterministic_shuffle(options, rng);
    return true;
}

} // namespace

std::string format_meters(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f m", decimals, value);
    return buf;
}

const std::vector<std::pair<std::string, Task>>& subtask_roster() {
    static const std::vector<std::pair<std::string, Task>> roster = {
        {"sm_height", Task::SM},          {"sm_width", Task::SM},
        {"sm_length", Task::SM},          {"sm_distance", Task::SM},
        {"sr_direction", Task::SR},       {"sr_closer_camera", Task::SR},
        {"sr_size_comparison", Task::SR}, {"sr_vertical", Task::SR},
        {"cp_bearing", Task::CP},         {"cp_distance_class", Task::CP},
        {"cp_rotation", Task::CP},        {"cp_motion", Task::CP},
        {"mc_reidentification", Task::MC},{"mc_shared_count", Task::MC},
        {"mc_presence", Task::MC},        {"sar_nearest", Task::SAR},
        {"sar_category_count", Task::SAR},{"sar_order", Task::SAR},
        {"sar_traversability", Task::SAR}};
    return roster;
}

std::vector<ViewPair> sample_view_pairs(const Scene& scene, const ObjectFrameIndex& index,
                                        int k, int max_pairs, double min_yaw_delta_deg,
                                        std::uint64_t rng_seed) {
    if (k < 1) throw EngineError("sample_view_pairs: k must be >= 1");
    std::vector<ViewPair> candidates;
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        const auto& fa = scene.frames[i];
        const auto va = index.visible_objects(fa.frame_id);
        const std::set<std::string> sa(va.begin(), va.end());
        for (std::size_t j = i + 1; j < scene.frames.size(); ++j) {
            const auto& fb = scene.frames[j];
            int shared = 0;
            for (const auto& id : index.visible_objects(fb.frame_id))
                if (sa.count(id)) ++shared;
            if (shared < k) continue;
            const RelativePose rel = relative_camera_pose(fa, fb);
            if (std::abs(rel.yaw_delta_deg) < min_yaw_delta_deg) continue;
            candidates.push_back({fa.frame_id, fb.frame_id, shared, rel});
        }
    }
    std::mt19937_64 rng(derive_seed(rng_seed, {scene.scene_id, "view_pairs"}));
    deterministic_shuffle(candidates, rng);
    if (max_pairs >= 0 && int(candidates.size()) > max_pairs) candidates.resize(max_pairs);
    return candidates;
}

// ---------------------------------------------------------------------------
// SM: spatial measurement
// ---------------------------------------------------------------------------

std::vector<QaRecord> synthesize_sm(const Scene& scene, const SceneGraph& graph,
                                    const QaConfig& config) {
    std::vector<QaRecord> out;

    struct Measure {
        const char* subtask;
        const char* template_id;
        std::vector<std::string> variants;
    };
    static const std::vector<Measure> measures = {
        {"sm_height", "sm_height",
         {"How tall is the {TAG} marked A?",
          "What is the height of the {TAG} marked A?",
          "Estimate the vertical size of the {TAG} marked A."}},
        {"sm_width", "sm_width",
         {"How wide is the {TAG} marked A?",
          "What is the width of the {TAG} marked A?",
          "Estimate the narrower horizontal size of the {TAG} marked A."}},
        {"sm_length", "sm_length",
         {"How long is the {TAG} marked A?",
          "What is the length of the {TAG} marked A?",
          "Estimate the longer horizontal size of the {TAG} marked A."}},
    };

    for (const auto& [id, node] : graph.nodes) {
        if (!node.metric) continue; // measurement QA is skipped for non-metric objects
        const WorldExtents ext = world_extents(node.box3d);
        const double values[3] = {ext.height, ext.width, ext.length};
        for (std::size_t m = 0; m < measures.size(); ++m) {
            const auto& spec = measures[m];
            QaRecord r = base_record(Task::SM, spec.subtask, spec.template_id, scene,
                                     derive_seed(config.seed, {scene.scene_id, spec.template_id,
                                                               graph.frame_id, id}));
            std::mt19937_64 rng(r.seed);
            r.question = fill(pick(rng, spec.variants), {{"{TAG}", node.tag}});
            if (!config.sm_multiple_choice ||
                !make_numeric_options(values[m], config.round_decimals, rng, r.options, r.answer)) {
                r.options.clear();
                r.answer = format_meters(values[m], config.round_decimals);
            }
            r.anchors = {{graph.frame_id, id, "A"}};
            r.image_refs = {graph.frame_id};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }

    // object-object distance
    for (auto it = graph.nodes.begin(); it != graph.nodes.end(); ++it) {
        auto jt = it;
        for (++jt; jt != graph.nodes.end(); ++jt) {
            if (!it->second.metric || !jt->second.metric) continue;
            const double dist = (it->second.box3d.center - jt->second.box3d.center).norm();
            QaRecord r = base_record(Task::SM, "sm_distance", "sm_distance_objects", scene,
                                     derive_seed(config.seed,
                                                 {scene.scene_id, "sm_distance_objects",
                                                  graph.frame_id, it->first, jt->first}));
            std::mt19937_64 rng(r.seed);
            r.question = fill(pick(rng, {"How far apart are the {TA} marked A and the {TB} marked B?",
                                         "What is the distance between the {TA} marked A and the {TB} marked B?",
                                         "Measure the separation between the objects marked A and B."}),
                              {{"{TA}", it->second.tag}, {"{TB}", jt->second.tag}});
            if (!config.sm_multiple_choice ||
                !make_numeric_options(dist, config.round_decimals, rng, r.options, r.answer)) {
                r.options.clear();
                r.answer = format_meters(dist, config.round_decimals);
            }
            r.anchors = {{graph.frame_id, it->first, "A"}, {graph.frame_id, jt->first, "B"}};
            r.image_refs = {graph.frame_id};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }

    // object-camera distance
    for (const auto& [id, node] : graph.nodes) {
        if (!node.metric) continue;
        QaRecord r = base_record(Task::SM, "sm_distance", "sm_distance_camera", scene,
                                 derive_seed(config.seed, {scene.scene_id, "sm_distance_camera",
                                                           graph.frame_id, id}));
        std::mt19937_64 rng(r.seed);
        r.question = fill(pick(rng, {"How far is the {TAG} marked A from the camera?",
                                     "What is the distance from the camera to the {TAG} marked A?",
                                     "Estimate how far away the {TAG} marked A is."}),
                          {{"{TAG}", node.tag}});
        if (!config.sm_multiple_choice ||
            !make_numeric_options(node.camera_distance, config.round_decimals, rng, r.options,
                                  r.answer)) {
            r.options.clear();
            r.answer = format_meters(node.camera_distance, config.round_decimals);
        }
        r.anchors = {{graph.frame_id, id, "A"}};
        r.image_refs = {graph.frame_id};
        finalize_record(r);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SR: spatial relationship
// ---------------------------------------------------------------------------

std::vector<QaRecord> synthesize_sr(const Scene& scene, const SceneGraph& graph,
                                    const QaConfig& config) {
    std::vector<QaRecord> out;
    const Frame* frame = scene.find_frame(graph.frame_id);
    if (!frame) return out;

    for (auto it = graph.nodes.begin(); it != graph.nodes.end(); ++it) {
        auto jt = it;
        for (++jt; jt != graph.nodes.end(); ++jt) {
            const GraphNode& a = it->second;
            const GraphNode& b = jt->second;
            const Vec3d ca = a.camera_center, cb = b.camera_center;

            // directional relation on the dominant unambiguous axis
            const double dx = cb.x() - ca.x();
            const double dz = cb.z() - ca.z();
            const bool lat_ok = std::abs(dx) > config.margins.lateral;
            const bool dep_ok = std::abs(dz) > config.margins.depth;
            if (lat_ok || dep_ok) {
                const bool lateral = lat_ok && (!dep_ok || std::abs(dx) >= std::abs(dz));
                const std::string answer = lateral ? (dx > 0 ? "left" : "right")
                                                   : (dz > 0 ? "front" : "behind");
                QaRecord r = base_record(Task::SR, "sr_direction", "sr_direction", scene,
                                         derive_seed(config.seed,
                                                     {scene.scene_id, "sr_direction",
                                                      graph.frame_id, it->first, jt->first}));
                std::mt19937_64 rng(r.seed);
                r.question = fill(pick(rng, {"Relative to the {TB} marked B, where is the {TA} marked A primarily located: left, right, front, or behind?",
                                             "From this viewpoint, is the {TA} marked A mainly to the left, right, in front of, or behind the {TB} marked B?",
                                             "Which word best describes where the {TA} marked A sits with respect to the {TB} marked B: left, right, front, or behind?"}),
                                  {{"{TA}", a.tag}, {"{TB}", b.tag}});
                r.options = {"left", "right", "front", "behind"};
                r.answer = answer;
                r.anchors = {{graph.frame_id, it->first, "A"}, {graph.frame_id, jt->first, "B"}};
                r.image_refs = {graph.frame_id};
                finalize_record(r);
                out.push_back(std::move(r));
            }

            // closer to camera
            if (std::abs(a.camera_distance - b.camera_distance) > config.margins.depth) {
                QaRecord r = base_record(Task::SR, "sr_closer_camera", "sr_closer_camera", scene,
                                         derive_seed(config.seed,
                                                     {scene.scene_id, "sr_closer_camera",
                                                      graph.frame_id, it->first, jt->first}));
                std::mt19937_64 rng(r.seed);
                r.question = fill(pick(rng, {"Which object is closer to the camera: the {TA} marked A or the {TB} marked B?",
                                             "Between the {TA} marked A and the {TB} marked B, which one is nearer to the viewer?",
                                             "Of the two marked objects, A ({TA}) and B ({TB}), which is at smaller camera distance?"}),
                                  {{"{TA}", a.tag}, {"{TB}", b.tag}});
                r.options = {"A", "B"};
                r.answer = a.camera_distance < b.camera_distance ? "A" : "B";
                r.anchors = {{graph.frame_id, it->first, "A"}, {graph.frame_id, jt->first, "B"}};
                r.image_refs = {graph.frame_id};
                finalize_record(r);
                out.push_back(std::move(r));
            }

            // size comparison by volume (relative, valid without metric scale)
            const AttributeComparison cmp = compare_attributes(a.box3d, b.box3d, config.tie_ratio);
            if (cmp.larger_volume != CompareWinner::Comparable) {
                QaRecord r = base_record(Task::SR, "sr_size_comparison", "sr_size_comparison",
                                         scene,
                                         derive_seed(config.seed,
                                                     {scene.scene_id, "sr_size_comparison",
                                                      graph.frame_id, it->first, jt->first}));
                std::mt19937_64 rng(r.seed);
                r.question = fill(pick(rng, {"Which object is larger: the {TA} marked A or the {TB} marked B?",
                                             "Compare the marked objects A ({TA}) and B ({TB}): which takes up more space?",
                                             "Is the bigger of the two marked objects A or B?"}),
                                  {{"{TA}", a.tag}, {"{TB}", b.tag}});
                r.options = {"A", "B"};
                r.answer = cmp.larger_volume == CompareWinner::First ? "A" : "B";
                r.anchors = {{graph.frame_id, it->first, "A"}, {graph.frame_id, jt->first, "B"}};
                r.image_refs = {graph.frame_id};
                finalize_record(r);
                out.push_back(std::move(r));
            }

            // vertical relation from world Z
            const double dwz = a.box3d.center.z() - b.box3d.center.z();
            if (std::abs(dwz) > config.margins.vertical) {
                QaRecord r = base_record(Task::SR, "sr_vertical", "sr_vertical", scene,
                                         derive_seed(config.seed,
                                                     {scene.scene_id, "sr_vertical",
                                                      graph.frame_id, it->first, jt->first}));
                std::mt19937_64 rng(r.seed);
                r.question = fill(pick(rng, {"Is the {TA} marked A above or below the {TB} marked B?",
                                             "Vertically, does the {TA} marked A sit above or below the {TB} marked B?",
                                             "Relative to the {TB} marked B, is the {TA} marked A higher up or lower down?"}),
                                  {{"{TA}", a.tag}, {"{TB}", b.tag}});
                r.options = {"above", "below"};
                r.answer = dwz > 0 ? "above" : "below";
                r.anchors = {{graph.frame_id, it->first, "A"}, {graph.frame_id, jt->first, "B"}};
                r.image_refs = {graph.frame_id};
                finalize_record(r);
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CP: camera perception
// ---------------------------------------------------------------------------

std::vector<QaRecord> synthesize_cp_single(const Scene& scene, const Frame& frame,
                                           const SceneGraph& graph, const QaConfig& config) {
    std::vector<QaRecord> out;
    for (const auto& [id, node] : graph.nodes) {
        // bearing relative to the image center
        const auto projected = project_point(frame.intrinsics, node.camera_center);
        if (projected) {
            const double du = projected->u - frame.intrinsics.cx;
            std::string answer;
            if (std::abs(du) <= config.bearing_margin_px - config.bearing_skip_band_px)
                answer = "center";
            else if (du <= -(config.bearing_margin_px + config.bearing_skip_band_px))
                answer = "left";
            else if (du >= config.bearing_margin_px + config.bearing_skip_band_px)
                answer = "right";
            if (!answer.empty()) {
                QaRecord r = base_record(Task::CP, "cp_bearing", "cp_bearing", scene,
                                         derive_seed(config.seed, {scene.scene_id, "cp_bearing",
                                                                   frame.frame_id, id}));
                std::mt19937_64 rng(r.seed);
                r.question = fill(pick(rng, {"Is the {TAG} marked A left of, right of, or at the center of the image?",
                                             "Where does the {TAG} marked A appear in this view: left, right, or center?",
                                             "Relative to the middle of the image, is the {TAG} marked A to the left, to the right, or centered?"}),
                                  {{"{TAG}", node.tag}});
                r.options = {"left", "center", "right"};
                r.answer = answer;
                r.anchors = {{frame.frame_id, id, "A"}};
                r.image_refs = {frame.frame_id};
                finalize_record(r);
                out.push_back(std::move(r));
            }
        }

        // coarse distance class (class labels carry no absolute units)
        const double d = node.camera_distance;
        std::string cls;
        if (d < config.near_max - config.class_skip_band)
            cls = "near";
        else if (d > config.near_max + config.class_skip_band &&
                 d < config.mid_max - config.class_skip_band)
            cls = "mid";
        else if (d > config.mid_max + config.class_skip_band)
            cls = "far";
        if (!cls.empty()) {
            QaRecord r = base_record(Task::CP, "cp_distance_class", "cp_distance_class", scene,
                                     derive_seed(config.seed, {scene.scene_id, "cp_distance_class",
                                                               frame.frame_id, id}));
            std::mt19937_64 rng(r.seed);
            r.question = fill(pick(rng, {"Is the {TAG} marked A near, mid-range, or far from the camera?",
                                         "Classify the camera distance of the {TAG} marked A: near, mid, or far.",
                                         "Would you call the {TAG} marked A near, mid, or far in this view?"}),
                              {{"{TAG}", node.tag}});
            r.options = {"near", "mid", "far"};
            r.answer = cls;
            r.anchors = {{frame.frame_id, id, "A"}};
            r.image_refs = {frame.frame_id};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<QaRecord> synthesize_cp_pair(const Scene& scene, const ViewPair& pair,
                                         const QaConfig& config) {
    std::vector<QaRecord> out;

    // camera rotation: positive yaw delta (counterclockwise about world +Z
    // seen from above) reads as "rotated left". Near-180 reversals and deltas
    // hugging the none gate are ambiguous and yield no record.
    const double d = pair.pose_delta.yaw_delta_deg;
    const bool near_reversal = std::abs(d) >= 180.0 - config.rotation_skip_band_deg;
    const bool near_none_gate =
        std::abs(std::abs(d) - config.rotation_none_max_deg) < config.rotation_skip_band_deg;
    if (!near_reversal && !near_none_gate) {
        const std::string answer = std::abs(d) < config.rotation_none_max_deg
                                       ? "none"
                                       : (d > 0 ? "left" : "right");
        QaRecord r = base_record(Task::CP, "cp_rotation", "cp_rotation", scene,
                                 derive_seed(config.seed, {scene.scene_id, "cp_rotation",
                                                           pair.frame_a, pair.frame_b}));
        std::mt19937_64 rng(r.seed);
        r.question = pick(rng, {"From view 1 to view 2, did the camera rotate left, rotate right, or not rotate?",
                                "Between the two views, which way did the camera turn: left, right, or none?",
                                "Comparing view 1 and view 2, has the camera rotated left, rotated right, or stayed at the same heading?"});
        r.options = {"left", "right", "none"};
        r.answer = answer;
        r.image_refs = {pair.frame_a, pair.frame_b};
        finalize_record(r);
        out.push_back(std::move(r));
    }

    // camera translation class; vertical-dominant pairs have no slot here and
    // near-ties between the top two axes are ambiguous
    {
        const MotionClass m = pair.pose_delta.motion;
        bool dominance_clear = true;
        if (m != MotionClass::Stationary) {
            const Vec3d& t = pair.pose_delta.camera_motion;
            std::array<double, 3> mags = {std::abs(t.x()), std::abs(t.y()), std::abs(t.z())};
            std::sort(mags.begin(), mags.end());
            dominance_clear = mags[2] > 0 && mags[1] / mags[2] < config.motion_tie_ratio;
            if (std::abs(t.norm() - 0.05) < 0.01) dominance_clear = false; // stationary gate
        }
        if (dominance_clear && m != MotionClass::Up && m != MotionClass::Down) {
            QaRecord r = base_record(Task::CP, "cp_motion", "cp_motion", scene,
                                     derive_seed(config.seed, {scene.scene_id, "cp_motion",
                                                               pair.frame_a, pair.frame_b}));
            std::mt19937_64 rng(r.seed);
            r.question = pick(rng, {"From view 1 to view 2, did the camera move forward, backward, left, right, or stay put?",
                                    "How did the camera position change between the views: forward, backward, left, right, or stationary?",
                                    "Judge the camera translation from view 1 to view 2: forward, backward, left, right, or stationary."});
            r.options = {"forward", "backward", "left", "right", "stationary"};
            r.answer = motion_name(m);
            r.image_refs = {pair.frame_a, pair.frame_b};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// MC: multi-view consistency
// ---------------------------------------------------------------------------

std::vector<QaRecord> synthesize_mc(const Scene& scene, const ViewPair& pair,
                                    const MultiViewGraph& mv, const QaConfig& config) {
    std::vector<QaRecord> out;

    // re-identification across the view pair
    if (mv.graph_b.nodes.size() >= 2) {
        for (const auto& shared_id : mv.shared_ids) {
            const GraphNode& node_a = mv.graph_a.nodes.at(shared_id);
            QaRecord r = base_record(Task::MC, "mc_reidentification", "mc_reidentification",
                                     scene,
                                     derive_seed(config.seed,
                                                 {scene.scene_id, "mc_reidentification",
                                                  pair.frame_a, pair.frame_b, shared_id}));
            std::mt19937_64 rng(r.seed);

            // distractors: same tag first, then anything else visible in view 2
            std::vector<std::string> same_tag, other;
            for (const auto& [id, node] : mv.graph_b.nodes) {
                if (id == shared_id) continue;
                (node.tag == node_a.tag ? same_tag : other).push_back(id);
            }
            std::vector<std::string> candidates = {shared_id};
            for (const auto& id : same_tag)
                if (candidates.size() < 4) candidates.push_back(id);
            for (const auto& id : other)
                if (candidates.size() < 4) candidates.push_back(id);
            if (candidates.size() < 2) continue;

            deterministic_shuffle(candidates, rng);
            r.question = fill(pick(rng, {"The {TAG} marked A in view 1 also appears in view 2. Which marked object in view 2 is the same instance?",
                                         "Find the object from view 1 marked A ({TAG}) again in view 2: which marker points at it?",
                                         "Which of the marked candidates in view 2 is the very same {TAG} that is marked A in view 1?"}),
                              {{"{TAG}", node_a.tag}});
            r.anchors = {{pair.frame_a, shared_id, "A"}};
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const std::string label(1, kMarkers[1 + i]); // B, C, D, E
                r.anchors.push_back({pair.frame_b, candidates[i], label});
                r.options.push_back(label);
                if (candidates[i] == shared_id) r.answer = label;
            }
            r.image_refs = {pair.frame_a, pair.frame_b};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }

    // shared-object count
    {
        QaRecord r = base_record(Task::MC, "mc_shared_count", "mc_shared_count", scene,
                                 derive_seed(config.seed, {scene.scene_id, "mc_shared_count",
                                                           pair.frame_a, pair.frame_b}));
        std::mt19937_64 rng(r.seed);
        r.question = pick(rng, {"How many objects visible in view 1 are also visible in view 2?",
                                "Count the objects that appear in both views.",
                                "What is the number of objects shared between view 1 and view 2?"});
        r.answer = std::to_string(mv.shared_ids.size());
        r.image_refs = {pair.frame_a, pair.frame_b};
        finalize_record(r);
        out.push_back(std::move(r));
    }

    // presence of a view-1 object in view 2
    for (const auto& [id, node] : mv.graph_a.nodes) {
        QaRecord r = base_record(Task::MC, "mc_presence", "mc_presence", scene,
                                 derive_seed(config.seed, {scene.scene_id, "mc_presence",
                                                           pair.frame_a, pair.frame_b, id}));
        std::mt19937_64 rng(r.seed);
        r.question = fill(pick(rng, {"Is the {TAG} marked A in view 1 also visible in view 2?",
                                     "Does the {TAG} marked A from view 1 appear in view 2 as well?",
                                     "Can the {TAG} marked A in the first view be seen in the second view?"}),
                          {{"{TAG}", node.tag}});
        r.options = {"yes", "no"};
        r.answer = mv.shared_ids.count(id) ? "yes" : "no";
        r.anchors = {{pair.frame_a, id, "A"}};
        r.image_refs = {pair.frame_a, pair.frame_b};
        finalize_record(r);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SAR: scene-aware reasoning
// ---------------------------------------------------------------------------

OccupancyGrid build_occupancy_grid(const Scene& scene, double resolution, double padding,
                                   const Vec2d* include_a, const Vec2d* include_b) {
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    std::vector<std::vector<Vec2d>> footprints;
    for (const auto& box : scene.boxes) {
        std::vector<Vec2d> pts;
        for (const auto& c : obb_corners(box)) {
            pts.emplace_back(c.x(), c.y());
            min_x = std::min(min_x, c.x());
            min_y = std::min(min_y, c.y());
            max_x = std::max(max_x, c.x());
            max_y = std::max(max_y, c.y());
        }
        footprints.push_back(convex_hull(std::move(pts)));
    }
    if (footprints.empty()) {
        min_x = min_y = -1.0;
        max_x = max_y = 1.0;
    }
    for (const Vec2d* p : {include_a, include_b}) {
        if (!p) continue;
        min_x = std::min(min_x, p->x());
        min_y = std::min(min_y, p->y());
        max_x = std::max(max_x, p->x());
        max_y = std::max(max_y, p->y());
    }

    OccupancyGrid grid;
    grid.resolution = resolution;
    // snap the origin to the resolution lattice so cell centers have exact
    // two-decimal coordinates at the default resolution
    grid.x0 = std::floor((min_x - padding) / resolution) * resolution;
    grid.y0 = std::floor((min_y - padding) / resolution) * resolution;
    grid.nx = int(std::ceil((max_x + padding - grid.x0) / resolution)) + 1;
    grid.ny = int(std::ceil((max_y + padding - grid.y0) / resolution)) + 1;
    grid.blocked.assign(std::size_t(grid.nx) * grid.ny, 0);

    for (const auto& hull : footprints) {
        if (hull.size() < 3) continue;
        double hx0 = 1e300, hy0 = 1e300, hx1 = -1e300, hy1 = -1e300;
        for (const auto& p : hull) {
            hx0 = std::min(hx0, p.x());
            hy0 = std::min(hy0, p.y());
            hx1 = std::max(hx1, p.x());
            hy1 = std::max(hy1, p.y());
        }
        const auto [ix0, iy0] = grid.cell_of({hx0, hy0});
        const auto [ix1, iy1] = grid.cell_of({hx1, hy1});
        for (int iy = std::max(0, iy0); iy <= std::min(grid.ny - 1, iy1); ++iy)
            for (int ix = std::max(0, ix0); ix <= std::min(grid.nx - 1, ix1); ++ix)
                if (point_in_convex_polygon(hull, grid.cell_center(ix, iy)))
                    grid.blocked[std::size_t(iy) * grid.nx + ix] = 1;
    }
    return grid;
}

bool grid_path_exists(const OccupancyGrid& grid, std::pair<int, int> from,
                      std::pair<int, int> to) {
    if (!grid.in_bounds(from.first, from.second) || !grid.in_bounds(to.first, to.second))
        return false;
    if (grid.is_blocked(from.first, from.second) || grid.is_blocked(to.first, to.second))
        return false;
    if (from == to) return true;
    std::vector<std::uint8_t> seen(grid.blocked.size(), 0);
    std::deque<std::pair<int, int>> queue = {from};
    seen[std::size_t(from.second) * grid.nx + from.first] = 1;
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        static const int dx[4] = {1, -1, 0, 0};
        static const int dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nx = x + dx[d], ny = y + dy[d];
            if (!grid.in_bounds(nx, ny) || grid.is_blocked(nx, ny)) continue;
            const std::size_t idx = std::size_t(ny) * grid.nx + nx;
            if (seen[idx]) continue;
            if (nx == to.first && ny == to.second) return true;
            seen[idx] = 1;
            queue.emplace_back(nx, ny);
        }
    }
    return false;
}

std::vector<QaRecord> synthesize_sar(const Scene& scene, const ObjectFrameIndex& index,
                                     const std::map<std::string, SceneGraph>& graphs,
                                     const QaConfig& config) {
    std::vector<QaRecord> out;

    // nearest object to an anchor
    for (const auto& [frame_id, graph] : graphs) {
        for (const auto& [anchor_id, anchor] : graph.nodes) {
            std::vector<std::pair<double, std::string>> by_distance;
            for (const auto& [id, node] : graph.nodes) {
                if (id == anchor_id) continue;
                by_distance.emplace_back((node.box3d.center - anchor.box3d.center).norm(), id);
            }
            if (by_distance.size() < 2) continue;
            std::sort(by_distance.begin(), by_distance.end());
            if (by_distance[1].first - by_distance[0].first <= config.nearest_margin) continue;

            QaRecord r = base_record(Task::SAR, "sar_nearest", "sar_nearest", scene,
                                     derive_seed(config.seed, {scene.scene_id, "sar_nearest",
                                                               frame_id, anchor_id}));
            std::mt19937_64 rng(r.seed);
            std::vector<std::string> candidates;
            for (std::size_t i = 0; i < by_distance.size() && i < 4; ++i)
                candidates.push_back(by_distance[i].second);
            deterministic_shuffle(candidates, rng);

            r.question = fill(pick(rng, {"Which marked object is closest to the {TAG} marked A?",
                                         "Of the marked candidates, which one lies nearest to the {TAG} marked A?",
                                         "Identify the marked object at the smallest distance from the {TAG} marked A."}),
                              {{"{TAG}", anchor.tag}});
            r.anchors = {{frame_id, anchor_id, "A"}};
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const std::string label(1, kMarkers[1 + i]);
                r.anchors.push_back({frame_id, candidates[i], label});
                r.options.push_back(label);
                if (candidates[i] == by_distance[0].second) r.answer = label;
            }
            r.image_refs = {frame_id};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }

    // category counting over the whole scene, anchored by a visible exemplar
    {
        std::map<std::string, int> tag_counts;
        for (const auto& box : scene.boxes) ++tag_counts[box.tag];
        for (const auto& [tag, count] : tag_counts) {
            // the frame showing the most instances of this tag anchors the question
            std::string best_frame;
            int best_visible = 0;
            for (const auto& [frame_id, graph] : graphs) {
                int visible = 0;
                for (const auto& [id, node] : graph.nodes)
                    if (node.tag == tag) ++visible;
                if (visible > best_visible) {
                    best_visible = visible;
                    best_frame = frame_id;
                }
            }
            if (best_visible == 0) continue;
            std::string exemplar;
            for (const auto& [id, node] : graphs.at(best_frame).nodes)
                if (node.tag == tag) {
                    exemplar = id;
                    break;
                }

            QaRecord r = base_record(Task::SAR, "sar_category_count", "sar_category_count",
                                     scene,
                                     derive_seed(config.seed,
                                                 {scene.scene_id, "sar_category_count", tag}));
            std::mt19937_64 rng(r.seed);
            r.question = fill(pick(rng, {"Counting the one marked A, how many objects of the same category as the marked {TAG} does the scene contain?",
                                         "How many {TAG} instances are there in the whole scene, including the one marked A?",
                                         "Across the entire scene, what is the total count of objects like the {TAG} marked A?"}),
                              {{"{TAG}", tag}});
            r.answer = std::to_string(count);
            r.anchors = {{best_frame, exemplar, "A"}};
            r.image_refs = {best_frame};
            finalize_record(r);
            out.push_back(std::move(r));
        }
    }

    // left-to-right ordering of three marked objects; the triple is the first
    // id-ordered combination whose projected columns clear the pixel margin,
    // so candidacy does not depend on the seed
    for (const auto& [frame_id, graph] : graphs) {
        if (graph.nodes.size() < 3) continue;
        const Frame* frame = scene.find_frame(frame_id);
        if (!frame) continue;

        std::vector<std::string> all_ids;
        for (const auto& [id, node] : graph.nodes) all_ids.push_back(id);
        std::vector<std::string> ids;
        std::vector<double> us;
        for (std::size_t i = 0; i < all_ids.size() && ids.empty(); ++i) {
            for (std::size_t j = i + 1; j < all_ids.size() && ids.empty(); ++j) {
                for (std::size_t k = j + 1; k < all_ids.size() && ids.empty(); ++k) {
                    std::vector<double> cols;
                    bool ok = true;
                    for (const auto& id : {all_ids[i], all_ids[j], all_ids[k]}) {
                        const auto p =
                            project_point(frame->intrinsics, graph.nodes.at(id).camera_center);
                        if (!p) {
                            ok = false;
                            break;
                        }
                        cols.push_back(p->u);
                    }
                    if (!ok) continue;
                    std::vector<double> sorted_cols = cols;
                    std::sort(sorted_cols.begin(), sorted_cols.end());
                    if (sorted_cols[1] - sorted_cols[0] < config.order_margin_px ||
                        sorted_cols[2] - sorted_cols[1] < config.order_margin_px)
                        continue;
                    ids = {all_ids[i], all_ids[j], all_ids[k]};
                    us = cols;
                }
            }
        }
        if (ids.empty()) continue;

        QaRecord r = base_record(Task::SAR, "sar_order", "sar_order", scene,
                                 derive_seed(config.seed, {scene.scene_id, "sar_order",
                                                           frame_id}));
        std::mt19937_64 rng(r.seed);

        // the seed decides which object wears which marker
        std::vector<std::size_t> label_of = {0, 1, 2};
        deterministic_shuffle(label_of, rng);
        std::vector<std::pair<double, std::string>> columns; // (u, marker label)
        for (std::size_t i = 0; i < 3; ++i)
            columns.emplace_back(us[i], std::string(1, kMarkers[label_of[i]]));
        std::sort(columns.begin(), columns.end());

        const std::string truth = columns[0].second + ", " + columns[1].second + ", " +
                                  columns[2].second;
        std::vector<std::string> perms;
        const std::string labels[3] = {"A", "B", "C"};
        int order[3] = {0, 1, 2};
        do {
            const std::string p = labels[order[0]] + ", " + labels[order[1]] + ", " +
                                  labels[order[2]];
            if (p != truth) perms.push_back(p);
        } while (std::next_permutation(order, order + 3));
        deterministic_shuffle(perms, rng);
        perms.resize(3);
        r.options = {truth, perms[0], perms[1], perms[2]};
        deterministic_shuffle(r.options, rng);

        r.question = pick(rng, {"Reading the image from left to right, in what order do the marked objects appear?",
                                "List the marked objects in their left-to-right order as seen in this view.",
                                "What is the left-to-right arrangement of the three marked objects?"});
        r.answer = truth;
        for (std::size_t i = 0; i < 3; ++i)
            r.anchors.push_back({frame_id, ids[i], std::string(1, kMarkers[label_of[i]])});
        r.image_refs = {frame_id};
        finalize_record(r);
        out.push_back(std::move(r));
    }

    // traversability on the scene's occupancy grid
    {
        const OccupancyGrid grid =
            build_occupancy_grid(scene, config.grid_resolution, config.grid_padding);
        std::vector<std::pair<int, int>> free_cells;
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix)
                if (!grid.is_blocked(ix, iy)) free_cells.emplace_back(ix, iy);

        std::string anchor_frame;
        std::size_t best = 0;
        for (const auto& [frame_id, graph] : graphs)
            if (graph.nodes.size() > best || anchor_frame.empty()) {
                best = graph.nodes.size();
                anchor_frame = frame_id;
            }

        if (free_cells.size() >= 2 && !anchor_frame.empty()) {
            std::mt19937_64 rng(derive_seed(config.seed, {scene.scene_id, "sar_traversability"}));
            int emitted = 0;
            for (int attempt = 0; attempt < 16 && emitted < config.traversability_per_scene;
                 ++attempt) {
                const auto a = free_cells[rng_below(rng, free_cells.size())];
                const auto b = free_cells[rng_below(rng, free_cells.size())];
                if (a == b) continue;
                const Vec2d pa = grid.cell_center(a.first, a.second);
                const Vec2d pb = grid.cell_center(b.first, b.second);

                QaRecord r = base_record(Task::SAR, "sar_traversability", "sar_traversability",
                                         scene,
                                         derive_seed(config.seed,
                                                     {scene.scene_id, "sar_traversability",
                                                      std::to_string(attempt)}));
                std::mt19937_64 vrng(r.seed);
                char coords[128];
                std::snprintf(coords, sizeof(coords), "(%.2f, %.2f) and (%.2f, %.2f)",
                              pa.x(), pa.y(), pb.x(), pb.y());
                r.question = fill(pick(vrng, {"On the floor plane, is there a clear path between the points {PTS} that avoids every object footprint?",
                                              "Could an agent travel on the ground between {PTS} without crossing any object?",
                                              "Treating object footprints as obstacles, are the floor positions {PTS} connected?"}),
                                  {{"{PTS}", coords}});
                r.options = {"yes", "no"};
                r.answer = grid_path_exists(grid, a, b) ? "yes" : "no";
                r.image_refs = {anchor_frame};
                finalize_record(r);
                out.push_back(std::move(r));
                ++emitted;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// scene driver
// ---------------------------------------------------------------------------

std::vector<QaRecord> apply_quotas_and_sort(std::vector<QaRecord> records,
                                            const QaConfig& config) {
    std::sort(records.begin(), records.end(),
              [](const QaRecord& a, const QaRecord& b) { return a.record_id < b.record_id; });
    records.erase(std::unique(records.begin(), records.end(),
                              [](const QaRecord& a, const QaRecord& b) {
                                  return a.record_id == b.record_id;
                              }),
                  records.end());
    if (config.subtask_quota.empty()) return records;
    std::map<std::string, int> used;
    std::vector<QaRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
        auto it = config.subtask_quota.find(r.subtask);
        if (it != config.subtask_quota.end() && used[r.subtask] >= it->second) continue;
        ++used[r.subtask];
        kept.push_back(std::move(r));
    }
    return kept;
}

std::vector<QaRecord> generate_scene_qa(const Scene& scene, const ObjectFrameIndex& index,
                                        const QaConfig& config) {
    std::map<std::string, SceneGraph> graphs;
    for (const auto& frame : scene.frames)
        graphs.emplace(frame.frame_id, build_frame_graph(scene, index, frame, config.margins));

    std::vector<QaRecord> records;
    auto absorb = [&](std::vector<QaRecord>&& batch) {
        for (auto& r : batch) records.push_back(std::move(r));
    };

    for (const auto& frame : scene.frames) {
        const SceneGraph& graph = graphs.at(frame.frame_id);
        absorb(synthesize_sm(scene, graph, config));
        absorb(synthesize_sr(scene, graph, config));
        absorb(synthesize_cp_single(scene, frame, graph, config));
    }

    const auto pairs = sample_view_pairs(scene, index, config.k_min_shared, config.max_pairs,
                                         config.min_yaw_delta_deg, config.seed);
    for (const auto& pair : pairs) {
        const Frame* fa = scene.find_frame(pair.frame_a);
        const Frame* fb = scene.find_frame(pair.frame_b);
        if (!fa || !fb) continue;
        const MultiViewGraph mv = merge_multiview(scene, index, *fa, *fb, config.margins);
        absorb(synthesize_cp_pair(scene, pair, config));
        absorb(synthesize_mc(scene, pair, mv, config));
    }

    absorb(synthesize_sar(scene, index, graphs, config));
    return apply_quotas_and_sort(std::move(records), config);
}

} // namespace spatialforge
