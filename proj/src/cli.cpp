#include "spatialforge/cli.hpp"

#include "spatialforge/manifest.hpp"
#include "spatialforge/marked_image.hpp"
#include "spatialforge/qa_oracle.hpp"
#include "spatialforge/stages.hpp"
#include "spatialforge/stats.hpp"
#include "spatialforge/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace spatialforge {

using nlohmann::json;
namespace fs = std::filesystem;

ObjectFrameIndex build_scene_index(const Scene& scene, const EngineConfig& config) {
    std::vector<std::vector<FrameObjectAttributes>> per_frame;
    for (const auto& frame : scene.frames)
        per_frame.push_back(filter_and_extract(scene, frame, config.extract));
    return build_index(scene, per_frame);
}

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    std::int64_t seed = -1;
    int workers = 0;
};

EngineConfig resolve_config(const GlobalFlags& flags) {
    EngineConfig config;
    if (!flags.config_path.empty()) config = load_config_file(flags.config_path);
    apply_env_overrides(config);
    if (flags.seed >= 0) config.seed = std::uint64_t(flags.seed);
    if (flags.workers > 0) {
        config.parallelism.extract_workers = flags.workers;
        config.parallelism.graph_workers = flags.workers;
        config.parallelism.synth_workers = flags.workers;
    }
    if (!flags.cache_dir.empty()) config.cache_dir = flags.cache_dir;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    config.propagate_seed();
    return config;
}

std::vector<std::string> expand_manifests(const std::vector<std::string>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::recursive_directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".json" &&
                    entry.path().filename() != "config.json")
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

int cmd_ingest(const std::vector<std::string>& manifests, bool check_files) {
    int ok = 0, failed = 0;
    for (const auto& path : expand_manifests(manifests)) {
        try {
            const Scene scene = load_scene(path, {check_files});
            std::cout << "ok " << path << ": scene '" << scene.scene_id << "', "
                      << scene.frames.size() << " frames, " << scene.boxes.size() << " boxes\n";
            ++ok;
        } catch (const std::exception& e) {
            std::cout << "error " << path << ": " << e.what() << "\n";
            ++failed;
        }
    }
    std::cout << ok << " ingested, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
}

void write_marked_images(const QaRunOutput& output, const EngineConfig& config) {
    if (!config.render_marked) return;
    const std::string marked_dir = (fs::path(config.out_dir) / "marked").string();
    for (const auto& record : output.records) {
        if (record.anchors.empty()) continue;
        const auto& scene = output.scenes.at(record.scene_id);
        const auto& index = output.indices.at(record.scene_id);
        render_record_marks(scene, index, record, marked_dir);
    }
}

int cmd_synthesize(const std::vector<std::string>& manifests, const EngineConfig& config) {
    const auto paths = expand_manifests(manifests);
    if (paths.empty()) throw InputError("no scene manifests given");
    QaRunOutput output = run_qa_pipeline(paths, config);
    fs::create_directories(config.out_dir);
    write_jsonl((fs::path(config.out_dir) / "qa.jsonl").string(), output.records);
    write_marked_images(output, config);
    {
        std::ofstream report(fs::path(config.out_dir) / "run_report.json");
        report << output.report.dump(2) << "\n";
    }
    std::map<std::string, std::string> sources;
    for (const auto& [scene_id, scene] : output.scenes) sources[scene_id] = scene.source_tag;
    std::cout << stats_table(compute_stats(output.records, sources));
    std::cout << "wrote " << output.records.size() << " records to "
              << (fs::path(config.out_dir) / "qa.jsonl").string() << "\n";
    return 0;
}

int cmd_lift(const std::vector<std::string>& manifests, EngineConfig config,
             const std::string& detections_dir) {
    if (!detections_dir.empty()) {
        config.detection_adapter.type = "file";
        config.detection_adapter.path = detections_dir;
    }
    const auto paths = expand_manifests(manifests);
    if (paths.empty()) throw InputError("no scene manifests given");
    LiftRunOutput output = run_lift_pipeline(paths, config, config.out_dir);
    for (std::size_t i = 0; i < output.scenes.size(); ++i)
        std::cout << "lifted scene '" << output.scenes[i].scene_id << "': "
                  << output.scenes[i].boxes.size() << " boxes -> "
                  << output.manifests_written[i] << "\n";
    {
        fs::create_directories(config.out_dir);
        std::ofstream report(fs::path(config.out_dir) / "lift_report.json");
        report << output.report.dump(2) << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& qa_path, const std::vector<std::string>& manifests,
                 const EngineConfig& config, const std::string& report_path) {
    const auto records = read_jsonl(qa_path);
    std::map<std::string, Scene> scenes;
    std::map<std::string, ObjectFrameIndex> indices;
    for (const auto& path : expand_manifests(manifests)) {
        Scene scene = load_scene(path);
        indices.emplace(scene.scene_id, build_scene_index(scene, config));
        scenes.emplace(scene.scene_id, std::move(scene));
    }
    const ValidationReport report = validate_corpus(records, scenes, indices, config.qa);
    std::cout << "validated " << report.total << " records: " << report.answer_mismatches
              << " answer mismatches, " << report.anchor_violations << " anchor violations, "
              << report.option_violations << " option violations, " << report.oracle_errors
              << " oracle errors\n";
    for (const auto& issue : report.issues)
        std::cout << "  " << issue.kind << " " << issue.record_id << ": " << issue.detail
                  << "\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << report.to_json().dump(2) << "\n";
    }
    return report.ok() ? 0 : 1;
}

int cmd_stats(const std::string& qa_path, const std::vector<std::string>& manifests,
              const std::string& json_path) {
    const auto records = read_jsonl(qa_path);
    std::map<std::string, std::string> sources;
    for (const auto& path : expand_manifests(manifests)) {
        const Scene scene = load_scene(path, {false});
        sources[scene.scene_id] = scene.source_tag;
    }
    const CorpusStats stats = compute_stats(records, sources);
    std::cout << stats_table(stats);
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << stats_to_json(stats).dump(2) << "\n";
    }
    return 0;
}

int cmd_gen_synthetic(const std::string& spec_path, const std::string& out_dir,
                      bool detections, bool gt_masks) {
    std::ifstream in(spec_path);
    if (!in) throw InputError("cannot open spec: " + spec_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("spec " + spec_path + " is not valid JSON: " + e.what());
    }
    const SyntheticSceneSpec spec = SyntheticSceneSpec::from_json(j);
    const Scene scene = generate_synthetic(spec, out_dir, {detections, gt_masks});
    std::cout << "generated scene '" << scene.scene_id << "': " << scene.frames.size()
              << " frames, " << scene.boxes.size() << " boxes -> " << out_dir
              << "/manifest.json\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"spatialforge: 3D box-centric spatial QA data engine"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "engine config JSON");
    app.add_option("--seed", flags.seed, "master seed (overrides config)");
    app.add_option("--workers", flags.workers, "worker count for parallel stages");
    app.add_option("--cache-dir", flags.cache_dir, "feature cache root");
    app.add_option("--out", flags.out_dir, "output directory");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate scene manifests");
    std::vector<std::string> ingest_manifests;
    bool ingest_check_files = true;
    ingest->add_option("manifests", ingest_manifests, "manifest files or directories")
        ->required();
    ingest->add_flag("!--no-check-files", ingest_check_files,
                     "skip image/depth existence checks");

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "generate the QA corpus");
    std::vector<std::string> synth_manifests;
    synth->add_option("--scenes", synth_manifests, "scene manifests or directories")
        ->required();

    // lift
    auto* lift = app.add_subcommand("lift", "lift detections into OBB annotations");
    std::vector<std::string> lift_manifests;
    std::string lift_detections;
    lift->add_option("--scenes", lift_manifests, "scene manifests (frames, no boxes needed)")
        ->required();
    lift->add_option("--detections", lift_detections,
                     "directory of {frame_id}.detections.json files");

    // validate
    auto* validate = app.add_subcommand("validate", "re-answer a corpus with the oracle");
    std::string validate_qa, validate_report;
    std::vector<std::string> validate_manifests;
    validate->add_option("--qa", validate_qa, "qa.jsonl path")->required();
    validate->add_option("--scenes", validate_manifests, "scene manifests")->required();
    validate->add_option("--report", validate_report, "write the JSON report here");

    // stats
    auto* stats = app.add_subcommand("stats", "corpus distribution report");
    std::string stats_qa, stats_json;
    std::vector<std::string> stats_manifests;
    stats->add_option("--qa", stats_qa, "qa.jsonl path")->required();
    stats->add_option("--scenes", stats_manifests, "scene manifests (for source tags)");
    stats->add_option("--json", stats_json, "write the JSON report here");

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "render a synthetic test scene");
    std::string gen_spec;
    bool gen_detections = false, gen_masks = false;
    gen->add_option("--spec", gen_spec, "synthetic scene spec JSON")->required();
    gen->add_flag("--detections", gen_detections, "write per-frame detection JSON");
    gen->add_flag("--gt-masks", gen_masks, "write per-object mask PNGs");

    // run
    auto* run = app.add_subcommand("run", "full pipeline: ingest + synthesize + stats");
    std::vector<std::string> run_manifests;
    run->add_option("--scenes", run_manifests, "scene manifests or directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const EngineConfig config = resolve_config(flags);
        if (*ingest) return cmd_ingest(ingest_manifests, ingest_check_files);
        if (*synth) return cmd_synthesize(synth_manifests, config);
        if (*lift) return cmd_lift(lift_manifests, config, lift_detections);
        if (*validate)
            return cmd_validate(validate_qa, validate_manifests, config, validate_report);
        if (*stats) return cmd_stats(stats_qa, stats_manifests, stats_json);
        if (*gen) {
            const std::string out = flags.out_dir.empty() ? config.out_dir : flags.out_dir;
            return cmd_gen_synthetic(gen_spec, out, gen_detections, gen_masks);
        }
        if (*run) {
            const int rc = cmd_ingest(run_manifests, true);
            if (rc != 0) return rc;
            return cmd_synthesize(run_manifests, config);
        }
        return 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace spatialforge
