#include "spatialforge/cli.hpp"

#include "spatialforge/config.hpp"
#include "spatialforge/qa_records.hpp"
#include "spatialforge/synthetic.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace spatialforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int cli(std::initializer_list<const char*> args) {
    std::vector<const char*> argv = {"spatialforge"};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_cli(int(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sf_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_spec(const fs::path& path, const std::string& scene_id, int frames) {
    SyntheticSceneSpec spec = sf_fixtures::cluster_spec(frames, scene_id);
    std::ofstream out(path);
    out << spec.to_json().dump(2);
}

} // namespace

TEST_CASE("config round trip and strictness") {
    EngineConfig config;
    config.seed = 42;
    config.extract.tau = 0.3;
    config.qa.subtask_quota["sm_height"] = 9;
    config.qa.margins.lateral = 0.2;
    config.mask_adapter.type = "file";
    config.mask_adapter.path = "/masks";
    config.parallelism.extract_workers = 3;
    config.cache_dir = "/tmp/cache";
    config.render_marked = false;
    config.propagate_seed();

    const EngineConfig back = config_from_json(config_to_json(config));
    CHECK(back == config);

    SUBCASE("unknown keys are rejected with their path") {
        json j = config_to_json(config);
        j["typo_key"] = 1;
        CHECK_THROWS_AS(config_from_json(j), InputError);
        json j2 = config_to_json(config);
        j2["qa"]["unknown"] = 1;
        try {
            config_from_json(j2);
            FAIL("expected InputError");
        } catch (const InputError& e) {
            CHECK(e.path() == "/qa/unknown");
        }
    }

    SUBCASE("out-of-range values are rejected") {
        json j = config_to_json(config);
        j["extract"]["tau"] = 1.5;
        CHECK_THROWS_AS(config_from_json(j), InputError);
        json j2 = config_to_json(config);
        j2["parallelism"]["queue_capacity"] = 0;
        CHECK_THROWS_AS(config_from_json(j2), InputError);
    }

    SUBCASE("quota keys must name registered sub-tasks") {
        json j = config_to_json(config);
        j["qa"]["quotas"]["sm_heigth"] = 3;
        CHECK_THROWS_AS(config_from_json(j), InputError);
    }

    SUBCASE("environment overrides with the SPATIALFORGE_ prefix") {
        setenv("SPATIALFORGE_SEED", "777", 1);
        setenv("SPATIALFORGE_TAU", "0.4", 1);
        setenv("SPATIALFORGE_WORKERS", "5", 1);
        EngineConfig fresh;
        apply_env_overrides(fresh);
        CHECK(fresh.seed == 777);
        CHECK(fresh.extract.tau == doctest::Approx(0.4));
        CHECK(fresh.parallelism.extract_workers == 5);
        CHECK(fresh.qa.seed == 777); // propagated
        unsetenv("SPATIALFORGE_SEED");
        unsetenv("SPATIALFORGE_TAU");
        unsetenv("SPATIALFORGE_WORKERS");
    }
}

TEST_CASE("cli exit codes and the full command surface") {
    const fs::path dir = fresh_dir("surface");
    const std::string spec_path = (dir / "spec.json").string();
    const std::string scene_dir = (dir / "scene").string();
    write_spec(spec_path, "cli_scene", 6);

    SUBCASE("gen-synthetic output always passes ingest") {
        CHECK(cli({"gen-synthetic", "--spec", spec_path.c_str(), "--out",
                   scene_dir.c_str()}) == 0);
        const std::string manifest = scene_dir + "/manifest.json";
        CHECK(cli({"ingest", manifest.c_str()}) == 0);
    }

    SUBCASE("broken manifests fail ingest with exit code 1") {
        CHECK(cli({"gen-synthetic", "--spec", spec_path.c_str(), "--out",
                   scene_dir.c_str()}) == 0);
        // a directory of manifests, one of them broken
        const fs::path many = dir / "many";
        fs::create_directories(many);
        fs::copy(scene_dir, many / "ok", fs::copy_options::recursive);
        json broken = json::parse(std::ifstream(scene_dir + "/manifest.json"));
        broken["boxes"][0]["extents"] = {0.0, 1.0, 1.0};
        fs::create_directories(many / "bad");
        std::ofstream(many / "bad" / "manifest.json") << broken.dump();
        const std::string many_str = many.string();
        CHECK(cli({"ingest", many_str.c_str()}) == 1);
    }

    SUBCASE("missing subcommand or unknown flag is an input error") {
        CHECK(cli({}) == 1);
        CHECK(cli({"--frobnicate"}) == 1);
        CHECK(cli({"validate", "--qa", "nowhere.jsonl"}) == 1); // missing --scenes
    }

    SUBCASE("synthesize, stats, validate round trip") {
        REQUIRE(cli({"gen-synthetic", "--spec", spec_path.c_str(), "--out",
                     scene_dir.c_str()}) == 0);
        const std::string manifest = scene_dir + "/manifest.json";
        const std::string out_dir = (dir / "out").string();

        // config file with a containment epsilon suited to float32 depth
        const std::string config_path = (dir / "config.json").string();
        {
            EngineConfig config;
            config.seed = 9;
            config.extract.containment_eps = 1e-5;
            config.extract.occupancy_stride = 1;
            config.extract.cloud_cap = 128;
            config.propagate_seed();
            std::ofstream out(config_path);
            out << config_to_json(config).dump(2);
        }

        REQUIRE(cli({"--config", config_path.c_str(), "--out", out_dir.c_str(), "synthesize",
                     "--scenes", manifest.c_str()}) == 0);
        const std::string qa_path = out_dir + "/qa.jsonl";
        CHECK(fs::exists(qa_path));
        CHECK(fs::exists(out_dir + "/run_report.json"));
        const auto records = read_jsonl(qa_path);
        CHECK(records.size() > 50);
        CHECK(fs::exists(out_dir + "/marked"));
        CHECK(!fs::is_empty(out_dir + "/marked"));

        CHECK(cli({"stats", "--qa", qa_path.c_str(), "--scenes", manifest.c_str()}) == 0);

        CHECK(cli({"--config", config_path.c_str(), "validate", "--qa", qa_path.c_str(),
                   "--scenes", manifest.c_str()}) == 0);

        // perturb one answer: validate must flag it and exit nonzero
        std::vector<json> lines;
        {
            std::ifstream in(qa_path);
            std::string line;
            while (std::getline(in, line))
                if (!line.empty()) lines.push_back(json::parse(line));
        }
        lines[0]["answer"] = std::string(lines[0]["answer"].get<std::string>()) + " oops";
        const std::string bad_path = out_dir + "/qa_bad.jsonl";
        {
            std::ofstream out(bad_path);
            for (const auto& l : lines) out << l.dump() << "\n";
        }
        CHECK(cli({"--config", config_path.c_str(), "validate", "--qa", bad_path.c_str(),
                   "--scenes", manifest.c_str()}) == 1);
    }

    SUBCASE("empty corpus validates and reports zero records") {
        REQUIRE(cli({"gen-synthetic", "--spec", spec_path.c_str(), "--out",
                     scene_dir.c_str()}) == 0);
        const std::string manifest = scene_dir + "/manifest.json";
        const std::string empty = (dir / "empty.jsonl").string();
        std::ofstream(empty).close();
        CHECK(cli({"validate", "--qa", empty.c_str(), "--scenes", manifest.c_str()}) == 0);
        CHECK(cli({"stats", "--qa", empty.c_str()}) == 0);
    }
}

TEST_CASE("synthetic spec json round trip") {
    SyntheticSceneSpec spec = sf_fixtures::cluster_spec(3, "spec_rt");
    spec.occluders.push_back(sf_fixtures::box_at("occ", {1, 1, 1}, {0.2, 2.0, 2.0}));
    const SyntheticSceneSpec back = SyntheticSceneSpec::from_json(spec.to_json());
    CHECK(back.scene_id == spec.scene_id);
    CHECK(back.boxes.size() == spec.boxes.size());
    CHECK(back.occluders.size() == 1);
    CHECK(back.trajectory.count == 3);
    CHECK(back.to_json().dump() == spec.to_json().dump());
}

TEST_CASE("synthetic depth matches the analytic ray oracle per pixel") {
    SyntheticSceneSpec spec;
    spec.scene_id = "ray";
    spec.boxes = {sf_fixtures::box_at("crate_0", {0, 0, 1.0}, {1.2, 1.0, 1.4}, "crate")};
    spec.occluders = {sf_fixtures::box_at("occ", {-1.5, 0.45, 1.0}, {0.05, 1.2, 2.2})};
    spec.trajectory.kind = Trajectory::Kind::Poses;
    spec.trajectory.poses = {look_at_pose(Vec3d(-4, 0, 1.2), Vec3d(0, 0, 1.0))};
    const auto render = render_frame(spec, spec.trajectory.poses[0]);

    const CameraIntrinsics k = spec.intrinsics();
    int box_pixels = 0, occluder_pixels = 0;
    for (int v = 0; v < spec.height; ++v) {
        for (int u = 0; u < spec.width; ++u) {
            const double crate = ray_box_depth(k, spec.trajectory.poses[0], spec.boxes[0], u, v,
                                               spec.max_depth);
            const double occ = ray_box_depth(k, spec.trajectory.poses[0], spec.occluders[0], u,
                                             v, spec.max_depth);
            double expected = 0.0;
            if (crate > 0 && (occ <= 0 || crate < occ)) {
                expected = crate;
                ++box_pixels;
            } else if (occ > 0) {
                expected = occ; // nearest surface wins
                ++occluder_pixels;
            }
            const float got = render.depth.values[std::size_t(v) * spec.width + u];
            if (expected == 0.0)
                CHECK(got == 0.0f);
            else
                CHECK(std::abs(got - expected) < 1e-6);
        }
    }
    CHECK(box_pixels > 100);
    CHECK(occluder_pixels > 100); // the occluder must actually shadow something
}

TEST_CASE("empty synthetic spec renders all-invalid depth") {
    SyntheticSceneSpec spec;
    spec.scene_id = "void";
    spec.trajectory.kind = Trajectory::Kind::Poses;
    spec.trajectory.poses = {look_at_pose(Vec3d(-4, 0, 1.2), Vec3d(0, 0, 1.0))};
    const auto render = render_frame(spec, spec.trajectory.poses[0]);
    for (const float d : render.depth.values) CHECK(d == 0.0f);
}
