// Acceptance suite: runs every release criterion end to end against synthetic
// scenes with analytic ground truth and prints one PASS/FAIL line each.

#include "spatialforge/cli.hpp"
#include "spatialforge/hull.hpp"
#include "spatialforge/lifting.hpp"
#include "spatialforge/manifest.hpp"
#include "spatialforge/qa_oracle.hpp"
#include "spatialforge/stages.hpp"
#include "spatialforge/synthetic.hpp"
#include "spatialforge/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <thread>

using namespace spatialforge;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            bool skipped = false) {
    const char* verdict = skipped ? "SKIP" : (pass ? "PASS" : "FAIL");
    std::printf("[%s] criterion %2d: %s — %s\n", verdict, id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass && !skipped) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::mt19937_64 g_rng(2026);
double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(g_rng);
}

ObbBox make_box(const std::string& id, const Vec3d& center, const Vec3d& extents,
                const std::string& tag) {
    ObbBox b;
    b.id = id;
    b.tag = tag;
    b.center = center;
    b.extents = extents;
    return b;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

SyntheticSceneSpec orbit_scene(const std::string& scene_id, int frames) {
    SyntheticSceneSpec spec;
    spec.scene_id = scene_id;
    spec.boxes = {make_box("crate_0", {0.0, 0.0, 0.5}, {1.0, 1.0, 1.0}, "crate"),
                  make_box("crate_1", {1.4, 1.2, 0.4}, {0.8, 0.8, 0.8}, "crate"),
                  make_box("ball_0", {-1.2, 0.9, 0.3}, {0.6, 0.6, 0.6}, "ball"),
                  make_box("ball_1", {0.9, -1.3, 0.22}, {0.5, 0.5, 0.5}, "ball"),
                  make_box("post_0", {-1.0, -1.1, 1.0}, {0.3, 0.3, 2.0}, "post")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0, 0, 0.5);
    spec.trajectory.radius = 5.0;
    spec.trajectory.height = 1.6;
    spec.trajectory.count = frames;
    return spec;
}

SyntheticSceneSpec orbit_scene_b(const std::string& scene_id, int frames) {
    SyntheticSceneSpec spec;
    spec.scene_id = scene_id;
    spec.boxes = {make_box("table_0", {0.2, 0.3, 0.35}, {1.6, 0.9, 0.7}, "table"),
                  make_box("chair_0", {-1.5, 0.2, 0.45}, {0.5, 0.5, 0.9}, "chair"),
                  make_box("chair_1", {1.8, -0.4, 0.45}, {0.5, 0.5, 0.9}, "chair"),
                  make_box("chair_2", {0.4, -1.7, 0.45}, {0.5, 0.5, 0.9}, "chair"),
                  make_box("lamp_0", {-1.1, -1.4, 0.8}, {0.3, 0.3, 1.6}, "lamp"),
                  make_box("bin_0", {1.2, 1.6, 0.25}, {0.4, 0.4, 0.5}, "bin")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0.2, 0, 0.5);
    spec.trajectory.radius = 5.5;
    spec.trajectory.height = 1.9;
    spec.trajectory.count = frames;
    spec.trajectory.start_deg = 10.0;
    return spec;
}

EngineConfig base_config() {
    EngineConfig config;
    config.seed = 2026;
    config.extract.containment_eps = 1e-5; // float32 depth quantization headroom
    config.extract.occupancy_stride = 2;
    config.extract.cloud_cap = 128;
    config.propagate_seed();
    return config;
}

struct TwoPlane {
    Scene scene;
    DepthMap depth;
};

TwoPlane render_two_plane(const std::string& mode) {
    SyntheticSceneSpec spec;
    spec.scene_id = "two_plane_" + mode;
    spec.boxes = {make_box("crate_0", {0, 0, 1.0}, {1, 1, 1}, "crate")};
    if (mode == "full")
        spec.occluders = {make_box("wall", {-2.0, 0, 1.0}, {0.05, 4.0, 4.0}, "wall")};
    else if (mode == "half")
        spec.occluders = {make_box("wall", {-2.0, 1.0, 1.0}, {0.05, 2.0, 4.0}, "wall")};
    spec.trajectory.kind = Trajectory::Kind::Poses;
    spec.trajectory.poses = {look_at_pose(Vec3d(-4, 0, 1.0), Vec3d(0, 0, 1.0))};

    TwoPlane out;
    out.scene.scene_id = spec.scene_id;
    out.scene.boxes = spec.boxes;
    Frame frame;
    frame.frame_id = "f0";
    frame.intrinsics = spec.intrinsics();
    frame.pose = spec.camera_poses()[0];
    out.scene.frames = {frame};
    out.depth = render_frame(spec, frame.pose).depth;
    return out;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

void criterion_1_geometry_round_trip() {
    const auto start = Clock::now();
    const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
    double max_err = 0.0;
    for (int i = 0; i < 100000; ++i) {
        CameraPose pose;
        pose.rotation = euler_to_matrix(uniform(-M_PI, M_PI), uniform(-1.2, 1.2),
                                        uniform(-M_PI, M_PI));
        pose.translation = Vec3d(uniform(-5, 5), uniform(-5, 5), uniform(-5, 5));
        const double u = uniform(0, 639), v = uniform(0, 479), d = uniform(0.05, 40.0);
        const Vec3d world = backproject_pixel(k, pose, u, v, d);
        const auto back = project_point(k, Vec3d(world_to_camera(pose, world)));
        if (!back) {
            max_err = 1e9;
            break;
        }
        max_err = std::max({max_err, std::abs(back->u - u), std::abs(back->v - v)});
    }
    const double elapsed = seconds_since(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "1e5 triples, max pixel error %.3g (< 1e-6), %.2f s (< 5 s)", max_err,
                  elapsed);
    report(1, "geometry round trip", max_err < 1e-6 && elapsed < 5.0, detail);
}

void criterion_2_containment_oracle() {
    int agree = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        ObbBox box = make_box("b", {uniform(-4, 4), uniform(-4, 4), uniform(-4, 4)},
                              {uniform(0.2, 3), uniform(0.2, 3), uniform(0.2, 3)}, "x");
        box.rpy = Vec3d(uniform(-M_PI, M_PI), uniform(-1.2, 1.2), uniform(-M_PI, M_PI));
        const Vec3d p(uniform(-6, 6), uniform(-6, 6), uniform(-6, 6));
        const Mat3d inv = box.rotation().inverse(); // explicit inverse, not transpose
        const Vec3d local = inv * (p - box.center);
        const bool oracle = std::abs(local.x()) <= 0.5 * box.extents.x() + 1e-9 &&
                            std::abs(local.y()) <= 0.5 * box.extents.y() + 1e-9 &&
                            std::abs(local.z()) <= 0.5 * box.extents.z() + 1e-9;
        if (oracle == point_in_obb(box, p)) ++agree;
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail), "%d/%d random (box, point) pairs agree", agree, n);
    report(2, "containment oracle", agree == n, detail);
}

void criterion_3_occlusion_filter() {
    const double tau = 0.25;
    const double eps = 1e-5;
    bool pass = true;
    std::string detail;
    const char* modes[3] = {"full", "open", "half"};
    const bool expected_visible[3] = {false, true, true};
    for (int m = 0; m < 3; ++m) {
        const TwoPlane tp = render_two_plane(modes[m]);
        ExtractConfig config;
        config.tau = tau;
        config.containment_eps = eps;
        config.occupancy_stride = 1;
        const auto attrs =
            filter_and_extract(tp.scene, tp.scene.frames[0], tp.depth, config);
        if (attrs.size() != 1) {
            pass = false;
            detail += std::string(modes[m]) + ": no record; ";
            continue;
        }

        // stride-1 exhaustive oracle with explicit homogeneous transforms
        const Frame& frame = tp.scene.frames[0];
        Mat4d t = Mat4d::Identity();
        t.topLeftCorner<3, 3>() = frame.pose.rotation;
        t.topRightCorner<3, 1>() = frame.pose.translation;
        const Mat3d box_inv = tp.scene.boxes[0].rotation().inverse();
        int valid = 0, inside = 0;
        const auto& region = attrs[0].box2d;
        for (int v = std::max(0, int(std::floor(region.min_v)));
             v <= std::min(frame.intrinsics.height - 1, int(std::floor(region.max_v))); ++v) {
            for (int u = std::max(0, int(std::floor(region.min_u)));
                 u <= std::min(frame.intrinsics.width - 1, int(std::floor(region.max_u)));
                 ++u) {
                const float d = tp.depth.at(u, v);
                if (d <= 0.0f || d > 50.0f) continue;
                ++valid;
                const Eigen::Vector4d cam(
                    (u - frame.intrinsics.cx) / frame.intrinsics.fx * d,
                    (v - frame.intrinsics.cy) / frame.intrinsics.fy * d, d, 1.0);
                const Vec3d world = (t * cam).head<3>();
                const Vec3d local = box_inv * (world - tp.scene.boxes[0].center);
                if (std::abs(local.x()) <= 0.5 + eps && std::abs(local.y()) <= 0.5 + eps &&
                    std::abs(local.z()) <= 0.5 + eps)
                    ++inside;
            }
        }
        const double oracle = valid > 0 ? double(inside) / valid : 0.0;
        const double tolerance = valid > 0 ? 1.0 / valid : 1e-12;
        const bool ratio_ok = std::abs(attrs[0].occupancy - oracle) <= tolerance;
        const bool verdict_ok = attrs[0].visible == expected_visible[m];
        pass = pass && ratio_ok && verdict_ok;
        char part[96];
        std::snprintf(part, sizeof(part), "%s: ratio %.3f oracle %.3f visible=%d; ", modes[m],
                      attrs[0].occupancy, oracle, int(attrs[0].visible));
        detail += part;
    }
    report(3, "occlusion filter reproduction", pass, detail);
}

struct CorpusFixture {
    std::vector<std::string> manifests;
    EngineConfig config;
    QaRunOutput output;
    double generation_seconds = 0.0;
};

CorpusFixture build_corpus(const fs::path& root) {
    CorpusFixture fixture;
    fixture.config = base_config();
    const Scene a = generate_synthetic(orbit_scene("orbit_a", 10), (root / "orbit_a").string());
    const Scene b = generate_synthetic(orbit_scene_b("orbit_b", 8), (root / "orbit_b").string());
    fixture.manifests = {(root / "orbit_a" / "manifest.json").string(),
                         (root / "orbit_b" / "manifest.json").string()};
    const auto start = Clock::now();
    fixture.output = run_qa_pipeline(fixture.manifests, fixture.config);
    fixture.generation_seconds = seconds_since(start);
    (void)a;
    (void)b;
    return fixture;
}

void criterion_4_oracle_sweep(const CorpusFixture& fixture) {
    const auto start = Clock::now();
    const auto& records = fixture.output.records;

    std::set<std::string> seen_subtasks;
    for (const auto& r : records) seen_subtasks.insert(r.subtask);
    const bool all_subtasks = seen_subtasks.size() == subtask_roster().size();

    const ValidationReport report_v = validate_corpus(records, fixture.output.scenes,
                                                      fixture.output.indices,
                                                      fixture.config.qa);
    const double elapsed = fixture.generation_seconds + seconds_since(start);
    char detail[240];
    std::snprintf(detail, sizeof(detail),
                  "%zu records, %zu/19 sub-tasks, %zu mismatches, %zu anchor + %zu option "
                  "violations, %zu oracle errors, %.1f s (< 120 s)",
                  records.size(), seen_subtasks.size(), report_v.answer_mismatches,
                  report_v.anchor_violations, report_v.option_violations,
                  report_v.oracle_errors, elapsed);
    const bool pass = records.size() >= 2000 && all_subtasks && report_v.ok() &&
                      elapsed < 120.0;
    report(4, "QA oracle sweep", pass, detail);
    if (!report_v.issues.empty()) {
        for (std::size_t i = 0; i < report_v.issues.size() && i < 5; ++i)
            std::printf("        issue: %s %s: %s\n", report_v.issues[i].kind.c_str(),
                        report_v.issues[i].record_id.c_str(),
                        report_v.issues[i].detail.c_str());
    }
}

void criterion_5_metric_gate(const CorpusFixture& fixture, const fs::path& root) {
    // flip every metric flag to false in copies of the manifests
    std::vector<std::string> flipped;
    for (const auto& path : fixture.manifests) {
        Scene scene = load_scene(path);
        for (auto& b : scene.boxes) b.metric = false;
        const fs::path dir = fs::path(path).parent_path();
        const std::string out = (dir / "manifest_non_metric.json").string();
        save_scene(scene, out);
        flipped.push_back(out);
    }
    const QaRunOutput output = run_qa_pipeline(flipped, fixture.config);
    for (const auto& path : flipped) fs::remove(path);

    std::map<std::string, std::size_t> before, after;
    for (const auto& r : fixture.output.records) ++before[r.subtask];
    for (const auto& r : output.records) ++after[r.subtask];
    std::size_t sm_after = 0;
    bool others_equal = true;
    for (const auto& [name, task] : subtask_roster()) {
        if (task == Task::SM)
            sm_after += after.count(name) ? after[name] : 0;
        else if ((before.count(name) ? before[name] : 0) != (after.count(name) ? after[name] : 0))
            others_equal = false;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "SM records after flip: %zu (= 0), other sub-task counts unchanged: %s",
                  sm_after, others_equal ? "yes" : "no");
    report(5, "metric gate", sm_after == 0 && others_equal, detail);
    (void)root;
}

void criterion_6_view_pair_contract(const CorpusFixture& fixture) {
    const Scene& scene = fixture.output.scenes.at("orbit_a");
    const ObjectFrameIndex& index = fixture.output.indices.at("orbit_a");
    const int k = fixture.config.qa.k_min_shared;
    const double min_yaw = fixture.config.qa.min_yaw_delta_deg;

    const auto pairs = sample_view_pairs(scene, index, k, fixture.config.qa.max_pairs, min_yaw,
                                         fixture.config.qa.seed);

    // exhaustive filter oracle + the same seeded shuffle
    struct PairKey {
        std::string a, b;
        int shared;
    };
    std::vector<PairKey> expected;
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        for (std::size_t j = i + 1; j < scene.frames.size(); ++j) {
            const auto va = index.visible_objects(scene.frames[i].frame_id);
            const auto vb = index.visible_objects(scene.frames[j].frame_id);
            int shared = 0;
            for (const auto& id : va)
                if (std::find(vb.begin(), vb.end(), id) != vb.end()) ++shared;
            if (shared < k) continue;
            const RelativePose rel = relative_camera_pose(scene.frames[i], scene.frames[j]);
            if (std::abs(rel.yaw_delta_deg) < min_yaw) continue;
            expected.push_back({scene.frames[i].frame_id, scene.frames[j].frame_id, shared});
        }
    }
    std::mt19937_64 rng(derive_seed(fixture.config.qa.seed, {scene.scene_id, "view_pairs"}));
    deterministic_shuffle(expected, rng);
    if (fixture.config.qa.max_pairs >= 0 &&
        int(expected.size()) > fixture.config.qa.max_pairs)
        expected.resize(std::size_t(fixture.config.qa.max_pairs));

    bool pass = pairs.size() == expected.size();
    for (std::size_t i = 0; pass && i < pairs.size(); ++i)
        pass = pairs[i].frame_a == expected[i].a && pairs[i].frame_b == expected[i].b &&
               pairs[i].shared_count == expected[i].shared;
    char detail[120];
    std::snprintf(detail, sizeof(detail), "%zu sampled pairs equal the oracle list exactly",
                  pairs.size());
    report(6, "view-pair contract", pass && !pairs.empty(), detail);
}

void criterion_7_lifting(const fs::path& root) {
    SyntheticSceneSpec spec;
    spec.scene_id = "lift3";
    spec.boxes = {make_box("crate_0", {0.0, 0.0, 0.5}, {1.2, 0.9, 1.0}, "crate"),
                  make_box("ball_0", {2.4, 1.8, 0.4}, {0.8, 0.8, 0.8}, "ball"),
                  make_box("post_0", {-2.0, 1.6, 0.9}, {0.5, 0.5, 1.8}, "post")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0, 0.8, 0.6);
    spec.trajectory.radius = 5.0;
    spec.trajectory.height = 3.0;
    spec.trajectory.count = 8;
    generate_synthetic(spec, (root / "lift3").string(), {true, false});

    EngineConfig config = base_config();
    config.detection_adapter.type = "file";
    config.detection_adapter.path = (root / "lift3").string();
    const LiftRunOutput output = run_lift_pipeline(
        {(root / "lift3" / "manifest.json").string()}, config, (root / "lift_out").string());

    bool pass = output.scenes.size() == 1 && output.scenes[0].boxes.size() == 3;
    double min_iou = 1.0;
    if (pass) {
        for (const auto& fitted : output.scenes[0].boxes) {
            const ObbBox* gt = nullptr;
            for (const auto& b : spec.boxes)
                if (b.tag == fitted.tag) gt = &b;
            if (!gt) {
                pass = false;
                break;
            }
            min_iou = std::min(min_iou, obb_iou_gravity_aligned(fitted, *gt));
        }
        pass = pass && min_iou >= 0.7;
    }

    bool reingest = false;
    if (pass) {
        try {
            const Scene reloaded = load_scene(output.manifests_written[0], {true});
            reingest = reloaded.boxes.size() == 3 && reloaded.source_tag == "lifted";
        } catch (const std::exception&) {
            reingest = false;
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%zu instances, min IoU vs ground truth %.3f (>= 0.7), re-ingest: %s",
                  output.scenes.empty() ? 0 : output.scenes[0].boxes.size(), min_iou,
                  reingest ? "clean" : "failed");
    report(7, "lifting closure and fidelity", pass && reingest, detail);
}

void criterion_8_calipers() {
    int checked = 0;
    bool pass = true;
    double worst_gap = 0.0;
    while (checked < 1000) {
        std::vector<Vec2d> pts;
        const int n = 5 + int(g_rng() % 60);
        for (int i = 0; i < n; ++i) pts.emplace_back(uniform(-4, 4), uniform(-3, 3));
        const auto hull = convex_hull(pts);
        if (hull.size() < 3) continue;
        ++checked;
        const MinAreaRect rect = min_area_rect(hull);
        double sweep_min = 1e300;
        for (double deg = 0.0; deg < 180.0; deg += 0.1) {
            const double a = deg * M_PI / 180.0;
            const double c = std::cos(a), s = std::sin(a);
            double lo_u = 1e300, hi_u = -1e300, lo_v = 1e300, hi_v = -1e300;
            for (const auto& p : hull) {
                const double u = c * p.x() + s * p.y();
                const double v = -s * p.x() + c * p.y();
                lo_u = std::min(lo_u, u);
                hi_u = std::max(hi_u, u);
                lo_v = std::min(lo_v, v);
                hi_v = std::max(hi_v, v);
            }
            sweep_min = std::min(sweep_min, (hi_u - lo_u) * (hi_v - lo_v));
        }
        worst_gap = std::max(worst_gap, rect.area - sweep_min);
        if (rect.area > sweep_min + 1e-9) pass = false;
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "1000 hulls, worst (calipers - sweep) gap %.3g (<= 1e-9)", worst_gap);
    report(8, "rotating-calipers optimality", pass, detail);
}

void criterion_9_determinism_and_cache(const fs::path& root) {
    generate_synthetic(orbit_scene("pipe9", 6), (root / "pipe9").string());
    const std::string manifest = (root / "pipe9" / "manifest.json").string();

    EngineConfig config = base_config();
    std::string reference;
    bool grid_identical = true;
    for (int workers : {1, 2, 4}) {
        for (int capacity : {1, 4, 64}) {
            EngineConfig c = config;
            c.parallelism.extract_workers = workers;
            c.parallelism.graph_workers = workers;
            c.parallelism.synth_workers = workers;
            c.parallelism.queue_capacity = capacity;
            const QaRunOutput out = run_qa_pipeline({manifest}, c);
            const std::string jsonl = (root / "pipe9.jsonl").string();
            write_jsonl(jsonl, out.records);
            const std::string bytes = read_file(jsonl);
            if (reference.empty())
                reference = bytes;
            else if (bytes != reference)
                grid_identical = false;
        }
    }

    EngineConfig cached = config;
    cached.cache_dir = (root / "cache9").string();
    const QaRunOutput cold = run_qa_pipeline({manifest}, cached);
    const QaRunOutput warm = run_qa_pipeline({manifest}, cached);
    auto recomputed = [](const QaRunOutput& out) {
        for (const auto& s : out.report["stages"])
            if (s["stage_id"] == "extract") return s["recomputed"].get<std::uint64_t>();
        return std::uint64_t(9999);
    };
    write_jsonl((root / "cold9.jsonl").string(), cold.records);
    write_jsonl((root / "warm9.jsonl").string(), warm.records);
    const bool cache_identical = read_file((root / "cold9.jsonl").string()) ==
                                     read_file((root / "warm9.jsonl").string()) &&
                                 read_file((root / "cold9.jsonl").string()) == reference;
    const std::uint64_t warm_recomputed = recomputed(warm);

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "3x3 worker/capacity grid byte-identical: %s; cold==warm bytes: %s; warm "
                  "extract recomputation count %llu (= 0)",
                  grid_identical ? "yes" : "no", cache_identical ? "yes" : "no",
                  static_cast<unsigned long long>(warm_recomputed));
    report(9, "pipeline determinism and cache soundness",
           grid_identical && cache_identical && warm_recomputed == 0, detail);
}

void criterion_10_speedup(const fs::path& root) {
    // CPU-bound workload: 200 frames whose boxes fill the view, dense stride
    SyntheticSceneSpec spec;
    spec.scene_id = "bench";
    spec.width = 640;
    spec.height = 480;
    spec.fx = spec.fy = 600.0;
    spec.cx = 320.0;
    spec.cy = 240.0;
    spec.boxes = {make_box("slab_0", {0.0, 0.0, 0.9}, {3.0, 3.0, 1.8}, "slab"),
                  make_box("slab_1", {2.4, 2.0, 0.9}, {2.2, 2.2, 1.8}, "slab"),
                  make_box("slab_2", {-2.4, 1.8, 0.9}, {2.2, 2.2, 1.8}, "slab"),
                  make_box("slab_3", {2.1, -2.2, 0.9}, {2.2, 2.2, 1.8}, "slab"),
                  make_box("slab_4", {-2.2, -2.3, 0.9}, {2.2, 2.2, 1.8}, "slab"),
                  make_box("slab_5", {0.1, 2.6, 0.9}, {2.2, 2.2, 1.8}, "slab"),
                  make_box("slab_6", {0.0, -2.7, 0.9}, {2.2, 2.2, 1.8}, "slab")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0, 0, 0.9);
    spec.trajectory.radius = 7.2;
    spec.trajectory.height = 3.4;
    spec.trajectory.count = 200;
    generate_synthetic(spec, (root / "bench").string());
    const std::string manifest = (root / "bench" / "manifest.json").string();

    EngineConfig config = base_config();
    config.extract.occupancy_stride = 1;
    config.extract.mask_stride = 1;
    config.qa.min_yaw_delta_deg = 361.0; // no pairs: extraction dominates
    for (const auto& [name, task] : subtask_roster()) config.qa.subtask_quota[name] = 0;

    auto timed_run = [&](int workers) {
        EngineConfig c = config;
        c.parallelism.extract_workers = workers;
        const auto start = Clock::now();
        const QaRunOutput out = run_qa_pipeline({manifest}, c);
        double per_frame_ms = 0.0;
        for (const auto& s : out.report["stages"])
            if (s["stage_id"] == "extract")
                per_frame_ms = s["busy_ms"].get<double>() / 200.0;
        return std::pair<double, double>(seconds_since(start), per_frame_ms);
    };

    const auto [t1, per_frame_1] = timed_run(1);
    const auto [t4, per_frame_4] = timed_run(4);
    const double ratio = t4 / t1;
    const unsigned cores = std::thread::hardware_concurrency();

    char detail[240];
    std::snprintf(detail, sizeof(detail),
                  "200 frames, %.1f ms/frame single-worker (>= 10 ms); wall 1 worker %.2f s, "
                  "4 workers %.2f s, ratio %.3f (< 0.6); host has %u cores",
                  per_frame_1, t1, t4, ratio, cores);
    const bool workload_ok = per_frame_1 >= 10.0;
    if (cores >= 4) {
        report(10, "pipelining speedup", workload_ok && ratio < 0.6, detail);
    } else if (workload_ok && ratio < 0.6) {
        // still passed despite fewer cores
        report(10, "pipelining speedup", true, detail);
    } else {
        report(10, "pipelining speedup", false,
               std::string(detail) + " — stated precondition is a >= 4-core host", true);
    }
    (void)per_frame_4;
}

void criterion_11_generation_determinism(const CorpusFixture& fixture, const fs::path& root) {
    const QaRunOutput second = run_qa_pipeline(fixture.manifests, fixture.config);
    write_jsonl((root / "run1.jsonl").string(), fixture.output.records);
    write_jsonl((root / "run2.jsonl").string(), second.records);
    const bool identical =
        read_file((root / "run1.jsonl").string()) == read_file((root / "run2.jsonl").string());

    EngineConfig reseeded = fixture.config;
    reseeded.seed = fixture.config.seed + 1;
    reseeded.propagate_seed();
    const QaRunOutput other = run_qa_pipeline(fixture.manifests, reseeded);

    std::set<std::string> ids;
    for (const auto& r : fixture.output.records) ids.insert(r.record_id);
    std::size_t unchanged = 0;
    for (const auto& r : other.records)
        if (ids.count(r.record_id)) ++unchanged;
    const double changed_fraction =
        1.0 - double(unchanged) / double(std::max<std::size_t>(1, other.records.size()));

    std::map<std::string, std::size_t> counts_a, counts_b;
    for (const auto& r : fixture.output.records) ++counts_a[r.subtask];
    for (const auto& r : other.records) ++counts_b[r.subtask];
    const bool structure_intact = counts_a == counts_b;

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "same-seed reruns byte-identical: %s; reseeded run changed %.1f%% of "
                  "record ids (>= 90%%), count structure intact: %s",
                  identical ? "yes" : "no", 100.0 * changed_fraction,
                  structure_intact ? "yes" : "no");
    report(11, "determinism of generation",
           identical && changed_fraction >= 0.9 && structure_intact, detail);
}

} // namespace

int main() {
    const fs::path root = fs::temp_directory_path() / "sf_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    std::printf("acceptance fixtures under %s\n", root.string().c_str());

    criterion_1_geometry_round_trip();
    criterion_2_containment_oracle();
    criterion_3_occlusion_filter();

    const CorpusFixture fixture = build_corpus(root);
    criterion_4_oracle_sweep(fixture);
    criterion_5_metric_gate(fixture, root);
    criterion_6_view_pair_contract(fixture);
    criterion_7_lifting(root);
    criterion_8_calipers();
    criterion_9_determinism_and_cache(root);
    criterion_10_speedup(root);
    criterion_11_generation_determinism(fixture, root);

    if (g_failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
