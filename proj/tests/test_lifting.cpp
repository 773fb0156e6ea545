#include "spatialforge/lifting.hpp"

#include "spatialforge/hull.hpp"
#include "spatialforge/manifest.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

using namespace spatialforge;
using sf_fixtures::box_at;
namespace fs = std::filesystem;

namespace {

InstanceMask single_pixel_mask(int w, int h, int u, int v) {
    std::vector<std::uint8_t> bits(std::size_t(w) * h, 0);
    bits[std::size_t(v) * w + u] = 1;
    return InstanceMask::from_bits(w, h, bits);
}

std::mt19937_64 g_rng(31);
double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(g_rng);
}

// partition equality, ignoring group order
std::set<std::set<std::size_t>> as_partition(const std::vector<std::vector<std::size_t>>& groups) {
    std::set<std::set<std::size_t>> out;
    for (const auto& g : groups) out.insert(std::set<std::size_t>(g.begin(), g.end()));
    return out;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    }
    std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

TEST_CASE("backproject_detection") {
    Frame frame;
    frame.frame_id = "f0";
    frame.intrinsics = {500, 500, 320, 240, 640, 480};
    frame.pose = CameraPose{};

    DepthMap depth;
    depth.width = 640;
    depth.height = 480;
    depth.values.assign(std::size_t(640) * 480, 0.0f);

    SUBCASE("principal-point pixel lands on the optical axis") {
        depth.values[std::size_t(240) * 640 + 320] = 2.0f;
        ViewDetection det{"thing", 1.0, single_pixel_mask(640, 480, 320, 240)};
        const auto cloud = backproject_detection(frame, depth, det, 1);
        REQUIRE(cloud.size() == 1);
        CHECK((cloud[0] - Vec3d(0, 0, 2)).norm() < 1e-12);
    }

    SUBCASE("all-invalid depth gives an empty cloud") {
        ViewDetection det{"thing", 1.0, single_pixel_mask(640, 480, 100, 100)};
        CHECK(backproject_detection(frame, depth, det, 1).empty());
    }

    SUBCASE("a planar surface back-projects to a coplanar cloud") {
        // wall 2 m ahead rendered through the exact ray caster
        SyntheticSceneSpec spec;
        spec.scene_id = "wall";
        spec.boxes = {box_at("wall_0", {0, 0, 1.0}, {4.0, 0.1, 3.0}, "wall")};
        spec.trajectory.kind = Trajectory::Kind::Poses;
        spec.trajectory.poses = {look_at_pose(Vec3d(0, -2.0, 1.0), Vec3d(0, 0, 1.0))};
        const auto render = render_frame(spec, spec.trajectory.poses[0]);

        Frame wall_frame;
        wall_frame.frame_id = "f0";
        wall_frame.intrinsics = spec.intrinsics();
        wall_frame.pose = spec.trajectory.poses[0];

        std::vector<std::uint8_t> bits(render.instance.size(), 0);
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = render.instance[i] == 0;
        ViewDetection det{"wall", 1.0, InstanceMask::from_bits(spec.width, spec.height, bits)};
        const auto cloud = backproject_detection(wall_frame, render.depth, det, 2);
        REQUIRE(cloud.size() > 500);

        // least-squares plane residual oracle
        Vec3d centroid = Vec3d::Zero();
        for (const auto& p : cloud) centroid += p;
        centroid /= double(cloud.size());
        Mat3d cov = Mat3d::Zero();
        for (const auto& p : cloud) cov += (p - centroid) * (p - centroid).transpose();
        Eigen::SelfAdjointEigenSolver<Mat3d> eig(cov);
        const Vec3d normal = eig.eigenvectors().col(0);
        double max_residual = 0.0;
        for (const auto& p : cloud)
            max_residual = std::max(max_residual, std::abs(normal.dot(p - centroid)));
        CHECK(max_residual < 1e-6);
    }
}

TEST_CASE("statistical outlier removal") {
    SUBCASE("a lone far point is dropped") {
        std::vector<Vec3d> cloud;
        for (int i = 0; i < 200; ++i)
            cloud.emplace_back(uniform(-0.1, 0.1), uniform(-0.1, 0.1), uniform(-0.1, 0.1));
        cloud.emplace_back(10.0, 10.0, 10.0);
        const auto kept = remove_outliers(cloud, 16, 2.0);
        CHECK(kept.size() == 200);
        for (const auto& p : kept) CHECK(p.norm() < 1.0);
    }

    SUBCASE("a uniform blob keeps at least 95 percent") {
        std::vector<Vec3d> cloud;
        for (int i = 0; i < 1000; ++i)
            cloud.emplace_back(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
        const auto kept = remove_outliers(cloud, 16, 2.0);
        CHECK(kept.size() >= 950);
    }

    SUBCASE("empty and tiny clouds pass through") {
        CHECK(remove_outliers({}, 16, 2.0).empty());
        const std::vector<Vec3d> tiny = {Vec3d(0, 0, 0), Vec3d(1, 1, 1)};
        CHECK(remove_outliers(tiny, 16, 2.0).size() == 2);
    }
}

TEST_CASE("association groups same-tag overlapping clouds") {
    auto blob = [&](const std::string& frame, int det, const std::string& tag, Vec3d center) {
        DetectionCloud c;
        c.frame_id = frame;
        c.detection_index = det;
        c.tag = tag;
        for (int i = 0; i < 30; ++i)
            c.points.push_back(center + Vec3d(uniform(-0.4, 0.4), uniform(-0.4, 0.4),
                                              uniform(-0.4, 0.4)));
        return c;
    };

    SUBCASE("one object seen from two views becomes one group") {
        const std::vector<DetectionCloud> clouds = {blob("f0", 0, "crate", {0, 0, 0}),
                                                    blob("f1", 0, "crate", {0.05, 0, 0})};
        CHECK(associate_instances(clouds, 0.3).size() == 1);
    }

    SUBCASE("same tag far apart stays separate") {
        const std::vector<DetectionCloud> clouds = {blob("f0", 0, "crate", {0, 0, 0}),
                                                    blob("f0", 1, "crate", {5, 0, 0})};
        CHECK(associate_instances(clouds, 0.3).size() == 2);
    }

    SUBCASE("different tags never merge") {
        const std::vector<DetectionCloud> clouds = {blob("f0", 0, "crate", {0, 0, 0}),
                                                    blob("f1", 0, "ball", {0, 0, 0})};
        CHECK(associate_instances(clouds, 0.3).size() == 2);
    }

    SUBCASE("duplicate detections of one object collapse to one group") {
        const auto d = blob("f0", 0, "crate", {0, 0, 0});
        auto d2 = d;
        d2.detection_index = 1;
        CHECK(associate_instances({d, d2}, 0.3).size() == 1);
    }

    SUBCASE("random scenes match a union-find oracle with the same predicate") {
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<DetectionCloud> clouds;
            const int n = 3 + int(g_rng() % 10);
            for (int i = 0; i < n; ++i)
                clouds.push_back(blob("f" + std::to_string(i % 4), i % 3,
                                      g_rng() % 2 ? "crate" : "ball",
                                      Vec3d(uniform(-3, 3), uniform(-3, 3), uniform(-1, 1))));

            const auto groups = associate_instances(clouds, 0.3);

            // oracle: per-cloud AABBs, pairwise predicate, transitive closure
            std::vector<std::pair<Vec3d, Vec3d>> bounds;
            for (const auto& c : clouds) {
                Vec3d lo = c.points[0], hi = c.points[0];
                for (const auto& p : c.points) {
                    lo = lo.cwiseMin(p);
                    hi = hi.cwiseMax(p);
                }
                bounds.emplace_back(lo, hi);
            }
            UnionFind uf(clouds.size());
            for (std::size_t i = 0; i < clouds.size(); ++i)
                for (std::size_t j = i + 1; j < clouds.size(); ++j)
                    if (clouds[i].tag == clouds[j].tag &&
                        aabb_iou(bounds[i].first, bounds[i].second, bounds[j].first,
                                 bounds[j].second) >= 0.3)
                        uf.unite(i, j);
            std::map<std::size_t, std::set<std::size_t>> by_root;
            for (std::size_t i = 0; i < clouds.size(); ++i) by_root[uf.find(i)].insert(i);
            std::set<std::set<std::size_t>> expected;
            for (const auto& [root, members] : by_root) expected.insert(members);

            CHECK(as_partition(groups) == expected);
        }
    }
}

TEST_CASE("fit_obb") {
    SUBCASE("axis-aligned rectangle footprint") {
        std::vector<Vec3d> cloud;
        for (const double z : {0.0, 1.0})
            for (const auto& [x, y] :
                 {std::pair{-1.0, -0.5}, {1.0, -0.5}, {1.0, 0.5}, {-1.0, 0.5}})
                cloud.emplace_back(x, y, z);
        const ObbBox box = fit_obb(cloud);
        CHECK(std::abs(box.rpy.z()) < 1e-12);
        CHECK(box.extents.x() == doctest::Approx(2.0));
        CHECK(box.extents.y() == doctest::Approx(1.0));
        CHECK(box.extents.z() == doctest::Approx(1.0));
        CHECK(box.center.z() == doctest::Approx(0.5));
    }

    SUBCASE("rotating the footprint rotates the yaw, canonical form") {
        std::vector<Vec3d> base;
        for (const double z : {0.0, 1.0})
            for (const auto& [x, y] :
                 {std::pair{-1.0, -0.5}, {1.0, -0.5}, {1.0, 0.5}, {-1.0, 0.5}})
                base.emplace_back(x, y, z);
        const double theta = 30.0 * M_PI / 180.0;
        const Mat3d rot = euler_to_matrix(0.0, 0.0, theta);
        std::vector<Vec3d> rotated;
        for (const auto& p : base) rotated.push_back(rot * p);
        const ObbBox box = fit_obb(rotated);
        CHECK(box.rpy.z() == doctest::Approx(theta).epsilon(1e-9));
        CHECK(box.extents.x() == doctest::Approx(2.0));
        CHECK(box.extents.y() == doctest::Approx(1.0));
        CHECK(box.rpy.z() >= -M_PI_2);
        CHECK(box.rpy.z() < M_PI_2);
        CHECK(box.extents.x() >= box.extents.y());
    }

    SUBCASE("equivariance under yaw for random clouds") {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Vec3d> cloud;
            for (int i = 0; i < 40; ++i)
                cloud.emplace_back(uniform(-2, 2), uniform(-1, 1), uniform(0, 1.5));
            const ObbBox base = fit_obb(cloud);
            const double theta = uniform(-M_PI, M_PI);
            const Mat3d rot = euler_to_matrix(0.0, 0.0, theta);
            std::vector<Vec3d> rotated;
            for (const auto& p : cloud) rotated.push_back(rot * p);
            const ObbBox spun = fit_obb(rotated);
            CHECK(spun.extents.x() == doctest::Approx(base.extents.x()).epsilon(1e-9));
            CHECK(spun.extents.y() == doctest::Approx(base.extents.y()).epsilon(1e-9));
            CHECK(spun.extents.z() == doctest::Approx(base.extents.z()).epsilon(1e-9));
            double diff = std::fmod(spun.rpy.z() - base.rpy.z() - theta, M_PI);
            if (diff < -M_PI_2) diff += M_PI;
            if (diff >= M_PI_2) diff -= M_PI;
            CHECK(std::abs(diff) < 1e-9);
        }
    }

    SUBCASE("fitted box contains every input point") {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Vec3d> cloud;
            for (int i = 0; i < 60; ++i)
                cloud.emplace_back(uniform(-2, 2), uniform(-2, 2), uniform(-1, 1));
            const ObbBox box = fit_obb(cloud);
            for (const auto& p : cloud) CHECK(point_in_obb(box, p, 1e-9));
        }
    }

    SUBCASE("degenerate clouds are rejected") {
        CHECK_THROWS_AS(fit_obb({Vec3d(0, 0, 0), Vec3d(1, 0, 0), Vec3d(2, 0, 0)}), EngineError);
        CHECK_THROWS_AS(
            fit_obb({Vec3d(0, 0, 0), Vec3d(1, 0, 0), Vec3d(2, 0, 0), Vec3d(3, 0, 1)}),
            EngineError); // collinear in XY
    }

    SUBCASE("calipers rectangle beats a 0.1 degree brute-force sweep") {
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<Vec2d> pts;
            const int n = 5 + int(g_rng() % 40);
            for (int i = 0; i < n; ++i) pts.emplace_back(uniform(-3, 3), uniform(-2, 2));
            const auto hull = convex_hull(pts);
            if (hull.size() < 3) continue;
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
            CHECK(rect.area <= sweep_min + 1e-9);
        }
    }
}

TEST_CASE("gravity-aligned obb IoU") {
    const ObbBox a = box_at("a", {0, 0, 0.5}, {1, 1, 1});
    CHECK(obb_iou_gravity_aligned(a, a) == doctest::Approx(1.0));
    const ObbBox apart = box_at("b", {5, 0, 0.5}, {1, 1, 1});
    CHECK(obb_iou_gravity_aligned(a, apart) == 0.0);
    ObbBox half = a;
    half.center.x() += 0.5; // overlap volume 0.5, union 1.5
    CHECK(obb_iou_gravity_aligned(a, half) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("lift_scene on rendered ground-truth masks") {
    const fs::path dir = fs::temp_directory_path() / "sf_test_lift";
    fs::remove_all(dir);

    SyntheticSceneSpec spec;
    spec.scene_id = "lift3";
    spec.boxes = {box_at("crate_0", {0.0, 0.0, 0.5}, {1.2, 0.9, 1.0}, "crate"),
                  box_at("ball_0", {2.4, 1.8, 0.4}, {0.8, 0.8, 0.8}, "ball"),
                  box_at("post_0", {-2.0, 1.6, 0.9}, {0.5, 0.5, 1.8}, "post")};
    spec.trajectory.kind = Trajectory::Kind::Orbit;
    spec.trajectory.target = Vec3d(0, 0.8, 0.6);
    spec.trajectory.radius = 5.0;
    spec.trajectory.height = 3.0;
    spec.trajectory.count = 8;
    const Scene scene = generate_synthetic(spec, dir.string(), {true, false});

    auto adapter = make_file_detection_adapter(dir.string());
    LiftConfig config;
    config.stride = 2;
    const LiftResult result = lift_scene(scene, *adapter, config);

    REQUIRE(result.instances.size() == 3);
    for (const auto& inst : result.instances) {
        CHECK(inst.merged_cloud.size() >= config.min_points);
        // fitted box contains (almost) the whole merged cloud
        std::size_t contained = 0;
        for (const auto& p : inst.merged_cloud)
            if (point_in_obb(inst.fitted_box, p, 1e-6)) ++contained;
        CHECK(double(contained) >= 0.95 * double(inst.merged_cloud.size()));

        // match ground truth by tag
        const ObbBox* gt = nullptr;
        for (const auto& b : spec.boxes)
            if (b.tag == inst.tag) gt = &b;
        REQUIRE(gt != nullptr);
        const double iou = obb_iou_gravity_aligned(inst.fitted_box, *gt);
        INFO("instance ", inst.instance_id, " iou ", iou);
        CHECK(iou >= 0.7);
        CHECK(inst.fitted_box.metric); // metric depth source
    }

    // closure: the emitted scene passes manifest validation and re-ingests
    const std::string lifted_path = (dir / "lifted.json").string();
    save_scene(result.scene, lifted_path);
    const Scene reloaded = load_scene(lifted_path, {true});
    CHECK(reloaded.boxes.size() == 3);
    CHECK(reloaded.source_tag == "lifted");

    // non-metric depth source propagates to the boxes
    Scene non_metric = scene;
    non_metric.depth_metric = false;
    const LiftResult nm = lift_scene(non_metric, *adapter, config);
    for (const auto& b : nm.scene.boxes) CHECK_FALSE(b.metric);

    // zero detections lift to an empty scene
    const fs::path empty_dir = dir / "no_detections";
    fs::create_directories(empty_dir);
    auto empty_adapter = make_file_detection_adapter(empty_dir.string());
    const LiftResult empty = lift_scene(scene, *empty_adapter, config);
    CHECK(empty.instances.empty());
    CHECK(empty.scene.boxes.empty());
}
