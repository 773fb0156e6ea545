#include "spatialforge/stages.hpp"

#include "spatialforge/image_io.hpp"
#include "spatialforge/manifest.hpp"
#include "spatialforge/util/rng.hpp"
#include "spatialforge/util/sha256.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>

namespace spatialforge {

using nlohmann::json;

namespace {

constexpr std::size_t kEmptySceneMarker = std::numeric_limits<std::size_t>::max();

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EngineError("cannot read file for digest: " + path);
    Sha256 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) h.update(buf, std::size_t(in.gcount()));
    return h.hex();
}

struct FrameTask {
    std::shared_ptr<const Scene> scene;
    std::size_t frame_index = 0;
    std::size_t total_frames = 0;
};

struct FrameAttrs {
    std::shared_ptr<const Scene> scene;
    std::string frame_id;
    std::vector<FrameObjectAttributes> attrs;
    std::size_t total_frames = 0;
};

struct SceneBundle {
    std::shared_ptr<const Scene> scene;
    std::shared_ptr<const ObjectFrameIndex> index;
    std::shared_ptr<const std::map<std::string, SceneGraph>> graphs;
    std::shared_ptr<const std::vector<ViewPair>> pairs;
};

struct SynthTask {
    SceneBundle bundle;
    enum class Kind { SingleView, Pair, SceneLevel } kind = Kind::SceneLevel;
    std::string frame_id;
    std::size_t pair_index = 0;
};

struct RecordBatch {
    std::vector<QaRecord> records;
};

std::unique_ptr<MaskRefinementAdapter> make_mask_adapter(const EngineConfig& config) {
    if (config.mask_adapter.type == "file")
        return make_file_mask_adapter(config.mask_adapter.path);
    if (config.mask_adapter.type == "service")
        return make_service_mask_adapter(config.mask_adapter.url, config.mask_adapter.timeout_ms,
                                         config.mask_adapter.retries);
    return nullptr;
}

json frame_manifest_entry(const Frame& f) {
    json fj;
    fj["frame_id"] = f.frame_id;
    fj["depth"] = f.depth_ref;
    fj["depth_format"] = f.depth_format == DepthFormat::Png16Millimeters ? "png16" : "f32";
    fj["intrinsics"] = {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy},
                        {"cx", f.intrinsics.cx}, {"cy", f.intrinsics.cy},
                        {"width", f.intrinsics.width}, {"height", f.intrinsics.height}};
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(f.pose.rotation(r, c));
    fj["pose"] = {{"rotation", rot},
                  {"translation",
                   {f.pose.translation.x(), f.pose.translation.y(), f.pose.translation.z()}}};
    return fj;
}

json boxes_json(const Scene& scene) {
    json out = json::array();
    for (const auto& b : scene.boxes)
        out.push_back({{"id", b.id},
                       {"tag", b.tag},
                       {"center", {b.center.x(), b.center.y(), b.center.z()}},
                       {"extents", {b.extents.x(), b.extents.y(), b.extents.z()}},
                       {"rpy", {b.rpy.x(), b.rpy.y(), b.rpy.z()}},
                       {"metric", b.metric}});
    return out;
}

} // namespace

QaRunOutput run_qa_pipeline(const std::vector<std::string>& manifest_paths,
                            const EngineConfig& config) {
    auto cache = std::make_shared<FeatureCache>(config.cache_dir);
    auto mask_adapter = std::shared_ptr<MaskRefinementAdapter>(make_mask_adapter(config));
    const std::string extract_digest = config.extract_config_digest();
    auto recomputed = std::make_shared<std::atomic<std::uint64_t>>(0);

    // verdicts for the driver: indexed scenes collected as they complete
    auto collected = std::make_shared<std::mutex>();
    auto scenes_out = std::make_shared<std::map<std::string, Scene>>();
    auto indices_out = std::make_shared<std::map<std::string, ObjectFrameIndex>>();
    auto records_out = std::make_shared<std::vector<QaRecord>>();

    Stage load{{"load", "manifest", "frame_task", config.parallelism.load_workers,
                config.parallelism.queue_capacity},
               [](const Message& msg) {
                   const auto& path = msg.as<std::string>();
                   auto scene = std::make_shared<const Scene>(load_scene(path));
                   std::vector<Message> out;
                   if (scene->frames.empty()) {
                       auto task = std::make_shared<const FrameTask>(
                           FrameTask{scene, kEmptySceneMarker, 0});
                       out.push_back(Message::make("frame_task", task, scene->scene_id,
                                                   scene->scene_id));
                       return out;
                   }
                   for (std::size_t i = 0; i < scene->frames.size(); ++i) {
                       auto task = std::make_shared<const FrameTask>(
                           FrameTask{scene, i, scene->frames.size()});
                       out.push_back(Message::make("frame_task", task,
                                                   scene->scene_id + "/" +
                                                       scene->frames[i].frame_id,
                                                   scene->scene_id));
                   }
                   return out;
               }};

    Stage extract{{"extract", "frame_task", "frame_attrs", config.parallelism.extract_workers,
                   config.parallelism.queue_capacity},
                  [=](const Message& msg) -> std::vector<Message> {
                      const auto& task = msg.as<FrameTask>();
                      const Scene& scene = *task.scene;
                      if (task.frame_index == kEmptySceneMarker) {
                          auto attrs = std::make_shared<const FrameAttrs>(
                              FrameAttrs{task.scene, "", {}, 0});
                          return {Message::make("frame_attrs", attrs, scene.scene_id,
                                                scene.scene_id)};
                      }
                      const Frame& frame = scene.frames[task.frame_index];

                      std::string key;
                      if (cache->enabled()) {
                          Sha256 h;
                          h.update(scene.scene_id);
                          h.update(frame_manifest_entry(frame).dump());
                          h.update(boxes_json(scene).dump());
                          h.update(file_digest(scene.resolve_path(frame.depth_ref)));
                          key = FeatureCache::make_key("extract", h.hex(), extract_digest);
                          if (auto hit = cache->get(key)) {
                              std::vector<FrameObjectAttributes> attrs;
                              for (const auto& aj : json::parse(*hit))
                                  attrs.push_back(attributes_from_json(aj));
                              auto fa = std::make_shared<const FrameAttrs>(FrameAttrs{
                                  task.scene, frame.frame_id, std::move(attrs),
                                  task.total_frames});
                              return {Message::make("frame_attrs", fa, msg.provenance,
                                                    scene.scene_id)};
                          }
                      }

                      recomputed->fetch_add(1);
                      auto attrs = filter_and_extract(scene, frame, config.extract);
                      apply_mask_refinement(scene, frame, attrs, mask_adapter.get(),
                                            config.prompt_kind());
                      if (cache->enabled()) {
                          json payload = json::array();
                          for (const auto& a : attrs) payload.push_back(attributes_to_json(a));
                          cache->put(key, payload.dump());
                      }
                      auto fa = std::make_shared<const FrameAttrs>(
                          FrameAttrs{task.scene, frame.frame_id, std::move(attrs),
                                     task.total_frames});
                      return {Message::make("frame_attrs", fa, msg.provenance,
                                            scene.scene_id)};
                  }};

    struct IndexAccumulator {
        std::shared_ptr<const Scene> scene;
        std::vector<std::vector<FrameObjectAttributes>> per_frame;
        std::size_t received = 0;
        std::size_t failures = 0;
        std::size_t total = kEmptySceneMarker; // unknown until a frame arrives
    };
    auto accumulators = std::make_shared<std::map<std::string, IndexAccumulator>>();
    auto accumulators_mutex = std::make_shared<std::mutex>();

    Stage index_stage{
        {"index", "frame_attrs", "indexed_scene", 1, config.parallelism.queue_capacity,
         /*sees_failures=*/true},
        [=](const Message& msg) -> std::vector<Message> {
            std::lock_guard lock(*accumulators_mutex);
            if (msg.failed) { // frame quarantined upstream; count it toward completion
                if (msg.group.empty()) return {};
                ++(*accumulators)[msg.group].failures;
            } else {
                const auto& fa = msg.as<FrameAttrs>();
                auto& acc = (*accumulators)[fa.scene->scene_id];
                acc.scene = fa.scene;
                acc.total = fa.total_frames;
                if (!fa.frame_id.empty()) {
                    acc.per_frame.push_back(fa.attrs);
                    ++acc.received;
                }
            }
            auto& acc = (*accumulators)[msg.group];
            if (acc.total == kEmptySceneMarker || acc.received + acc.failures < acc.total)
                return {};
            const Scene& scene = *acc.scene;
            auto index = std::make_shared<const ObjectFrameIndex>(
                build_index(scene, acc.per_frame));
            auto scene_ptr = acc.scene;
            accumulators->erase(msg.group);
            {
                std::lock_guard out_lock(*collected);
                scenes_out->emplace(scene.scene_id, scene);
                indices_out->emplace(scene.scene_id, *index);
            }
            auto bundle = std::make_shared<const SceneBundle>(
                SceneBundle{scene_ptr, index, nullptr, nullptr});
            return {Message::make("indexed_scene", bundle, scene.scene_id, scene.scene_id)};
        }};

    Stage graph{{"graph", "indexed_scene", "graphed_scene", config.parallelism.graph_workers,
                 config.parallelism.queue_capacity},
                [=](const Message& msg) -> std::vector<Message> {
                    const auto& in = msg.as<SceneBundle>();
                    auto graphs = std::make_shared<std::map<std::string, SceneGraph>>();
                    for (const auto& frame : in.scene->frames)
                        graphs->emplace(frame.frame_id,
                                        build_frame_graph(*in.scene, *in.index, frame,
                                                          config.qa.margins));
                    auto bundle = std::make_shared<const SceneBundle>(
                        SceneBundle{in.scene, in.index, graphs, nullptr});
                    return {Message::make("graphed_scene", bundle, msg.provenance)};
                }};

    Stage sample{{"sample-pairs", "graphed_scene", "synth_task", 1,
                  config.parallelism.queue_capacity},
                 [=](const Message& msg) -> std::vector<Message> {
                     const auto& in = msg.as<SceneBundle>();
                     auto pairs = std::make_shared<const std::vector<ViewPair>>(
                         sample_view_pairs(*in.scene, *in.index, config.qa.k_min_shared,
                                           config.qa.max_pairs, config.qa.min_yaw_delta_deg,
                                           config.qa.seed));
                     SceneBundle bundle{in.scene, in.index, in.graphs, pairs};
                     std::vector<Message> out;
                     for (const auto& frame : in.scene->frames) {
                         auto task = std::make_shared<const SynthTask>(SynthTask{
                             bundle, SynthTask::Kind::SingleView, frame.frame_id, 0});
                         out.push_back(Message::make("synth_task", task,
                                                     in.scene->scene_id + "/" + frame.frame_id));
                     }
                     for (std::size_t p = 0; p < pairs->size(); ++p) {
                         auto task = std::make_shared<const SynthTask>(
                             SynthTask{bundle, SynthTask::Kind::Pair, "", p});
                         out.push_back(Message::make("synth_task", task,
                                                     in.scene->scene_id + "/pair" +
                                                         std::to_string(p)));
                     }
                     auto task = std::make_shared<const SynthTask>(
                         SynthTask{bundle, SynthTask::Kind::SceneLevel, "", 0});
                     out.push_back(Message::make("synth_task", task, in.scene->scene_id));
                     return out;
                 }};

    Stage synthesize{
        {"synthesize", "synth_task", "record_batch", config.parallelism.synth_workers,
         config.parallelism.queue_capacity},
        [=](const Message& msg) -> std::vector<Message> {
            const auto& task = msg.as<SynthTask>();
            const Scene& scene = *task.bundle.scene;
            auto batch = std::make_shared<RecordBatch>();
            switch (task.kind) {
            case SynthTask::Kind::SingleView: {
                const SceneGraph& g = task.bundle.graphs->at(task.frame_id);
                const Frame* frame = scene.find_frame(task.frame_id);
                auto sm = synthesize_sm(scene, g, config.qa);
                auto sr = synthesize_sr(scene, g, config.qa);
                auto cp = synthesize_cp_single(scene, *frame, g, config.qa);
                batch->records.insert(batch->records.end(), sm.begin(), sm.end());
                batch->records.insert(batch->records.end(), sr.begin(), sr.end());
                batch->records.insert(batch->records.end(), cp.begin(), cp.end());
                break;
            }
            case SynthTask::Kind::Pair: {
                const ViewPair& pair = (*task.bundle.pairs)[task.pair_index];
                const Frame* fa = scene.find_frame(pair.frame_a);
                const Frame* fb = scene.find_frame(pair.frame_b);
                const MultiViewGraph mv =
                    merge_multiview(scene, *task.bundle.index, *fa, *fb, config.qa.margins);
                auto cp = synthesize_cp_pair(scene, pair, config.qa);
                auto mc = synthesize_mc(scene, pair, mv, config.qa);
                batch->records.insert(batch->records.end(), cp.begin(), cp.end());
                batch->records.insert(batch->records.end(), mc.begin(), mc.end());
                break;
            }
            case SynthTask::Kind::SceneLevel: {
                auto sar = synthesize_sar(scene, *task.bundle.index, *task.bundle.graphs,
                                          config.qa);
                batch->records.insert(batch->records.end(), sar.begin(), sar.end());
                break;
            }
            }
            return {Message::make("record_batch",
                                  std::shared_ptr<const RecordBatch>(std::move(batch)),
                                  msg.provenance)};
        }};

    Stage write{{"write", "record_batch", "corpus", 1, config.parallelism.queue_capacity},
                [=](const Message& msg) -> std::vector<Message> {
                    const auto& batch = msg.as<RecordBatch>();
                    std::lock_guard lock(*collected);
                    records_out->insert(records_out->end(), batch.records.begin(),
                                        batch.records.end());
                    return {};
                }};

    Pipeline pipeline = Pipeline::build(
        {load, extract, index_stage, graph, sample, synthesize, write}, config.error_ceiling);

    std::vector<Message> inputs;
    for (const auto& path : manifest_paths)
        inputs.push_back(Message::make("manifest", std::make_shared<const std::string>(path),
                                       path));
    const RunReport pipe_report = pipeline.run(std::move(inputs), [](Message&&) {});

    QaRunOutput out;
    out.records = apply_quotas_and_sort(std::move(*records_out), config.qa);
    out.scenes = std::move(*scenes_out);
    out.indices = std::move(*indices_out);
    out.report = pipe_report.to_json();
    out.report["cache"] = {{"hits", cache->hits()}, {"misses", cache->misses()}};
    for (auto& stage_json : out.report["stages"])
        if (stage_json["stage_id"] == "extract") stage_json["recomputed"] = recomputed->load();
    return out;
}

// ---------------------------------------------------------------------------
// lifting pipeline
// ---------------------------------------------------------------------------

namespace {

struct DetectTask {
    std::shared_ptr<const Scene> scene;
    std::size_t frame_index = 0;
    std::size_t total_frames = 0;
    std::shared_ptr<const std::vector<ViewDetection>> detections;
    std::string input_digest; // detections + depth content
};

struct CloudBatch {
    std::shared_ptr<const Scene> scene;
    std::string frame_id;
    std::vector<DetectionCloud> clouds;
    std::size_t total_frames = 0;
    std::string input_digest;
};

struct FitTask {
    std::shared_ptr<const Scene> scene;
    std::shared_ptr<const std::vector<DetectionCloud>> all_clouds;
    std::vector<std::size_t> group; // empty when precomputed
    std::shared_ptr<const LiftedInstance> precomputed;
    std::size_t group_index = 0;
    std::size_t total_groups = 0;
    std::string scene_key; // cache key, filled on recompute
};

struct SceneInstance {
    std::shared_ptr<const Scene> scene;
    LiftedInstance instance;
    std::size_t group_index = 0;
    std::size_t total_groups = 0;
    std::string scene_key;
};

json instance_to_json(const LiftedInstance& inst) {
    json j;
    j["instance_id"] = inst.instance_id;
    j["tag"] = inst.tag;
    json members = json::array();
    for (const auto& [fid, di] : inst.members) members.push_back({fid, di});
    j["members"] = std::move(members);
    j["box"] = {{"id", inst.fitted_box.id},
                {"tag", inst.fitted_box.tag},
                {"center", {inst.fitted_box.center.x(), inst.fitted_box.center.y(),
                            inst.fitted_box.center.z()}},
                {"extents", {inst.fitted_box.extents.x(), inst.fitted_box.extents.y(),
                             inst.fitted_box.extents.z()}},
                {"rpy", {inst.fitted_box.rpy.x(), inst.fitted_box.rpy.y(),
                         inst.fitted_box.rpy.z()}},
                {"metric", inst.fitted_box.metric}};
    return j;
}

LiftedInstance instance_from_json(const json& j) {
    LiftedInstance inst;
    inst.instance_id = j.at("instance_id").get<std::string>();
    inst.tag = j.at("tag").get<std::string>();
    for (const auto& m : j.at("members"))
        inst.members.emplace_back(m[0].get<std::string>(), m[1].get<int>());
    const json& b = j.at("box");
    inst.fitted_box.id = b.at("id").get<std::string>();
    inst.fitted_box.tag = b.at("tag").get<std::string>();
    const auto& c = b.at("center");
    inst.fitted_box.center = Vec3d(c[0], c[1], c[2]);
    const auto& e = b.at("extents");
    inst.fitted_box.extents = Vec3d(e[0], e[1], e[2]);
    const auto& r = b.at("rpy");
    inst.fitted_box.rpy = Vec3d(r[0], r[1], r[2]);
    inst.fitted_box.metric = b.at("metric").get<bool>();
    return inst;
}

std::unique_ptr<DetectionAdapter> make_detection_adapter(const EngineConfig& config) {
    if (config.detection_adapter.type == "file")
        return make_file_detection_adapter(config.detection_adapter.path);
    if (config.detection_adapter.type == "service")
        return make_service_detection_adapter(config.detection_adapter.url,
                                              config.detection_adapter.timeout_ms,
                                              config.detection_adapter.retries);
    throw InputError("/detection_adapter/type",
                     "lifting needs a file or service detection adapter");
}

} // namespace

LiftRunOutput run_lift_pipeline(const std::vector<std::string>& manifest_paths,
                                const EngineConfig& config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    auto cache = std::make_shared<FeatureCache>(config.cache_dir);
    auto adapter = std::shared_ptr<DetectionAdapter>(make_detection_adapter(config));
    const std::string lift_digest = config.lift_config_digest();

    auto out_mutex = std::make_shared<std::mutex>();
    auto scenes_out = std::make_shared<std::vector<Scene>>();
    auto written = std::make_shared<std::vector<std::string>>();

    Stage ingest{{"detect-ingest", "manifest", "detect_task", 1,
                  config.parallelism.queue_capacity},
                 [=](const Message& msg) {
                     const auto& path = msg.as<std::string>();
                     auto scene = std::make_shared<const Scene>(load_scene(path));
                     std::vector<Message> out;
                     for (std::size_t i = 0; i < scene->frames.size(); ++i) {
                         const Frame& frame = scene->frames[i];
                         auto detections =
                             std::make_shared<const std::vector<ViewDetection>>(
                                 adapter->detect(*scene, frame));
                         Sha256 h;
                         h.update(scene->scene_id);
                         h.update(frame.frame_id);
                         for (const auto& d : *detections) {
                             h.update(d.tag);
                             for (const auto run : d.mask.runs)
                                 h.update(std::to_string(run) + ",");
                         }
                         h.update(file_digest(scene->resolve_path(frame.depth_ref)));
                         auto task = std::make_shared<const DetectTask>(DetectTask{
                             scene, i, scene->frames.size(), detections, h.hex()});
                         out.push_back(Message::make("detect_task", task,
                                                     scene->scene_id + "/" + frame.frame_id,
                                                     scene->scene_id));
                     }
                     return out;
                 }};

    Stage backproject{
        {"backproject", "detect_task", "clouds", config.parallelism.extract_workers,
         config.parallelism.queue_capacity},
        [=](const Message& msg) -> std::vector<Message> {
            const auto& task = msg.as<DetectTask>();
            const Scene& scene = *task.scene;
            const Frame& frame = scene.frames[task.frame_index];
            const DepthMap depth =
                load_depth(scene.resolve_path(frame.depth_ref), frame.depth_format,
                           frame.intrinsics.width, frame.intrinsics.height);
            auto batch = std::make_shared<CloudBatch>();
            batch->scene = task.scene;
            batch->frame_id = frame.frame_id;
            batch->total_frames = task.total_frames;
            batch->input_digest = task.input_digest;
            for (std::size_t d = 0; d < task.detections->size(); ++d) {
                auto points = backproject_detection(frame, depth, (*task.detections)[d],
                                                    config.lift.stride, config.lift.max_depth);
                std::mt19937_64 rng(derive_seed(config.lift.global_seed,
                                                {scene.scene_id, frame.frame_id,
                                                 std::to_string(d)}));
                points = reservoir_sample(points, config.lift.max_points_per_detection, rng);
                points = remove_outliers(points, config.lift.knn_k, config.lift.knn_sigma);
                if (points.empty()) continue;
                batch->clouds.push_back({frame.frame_id, int(d), (*task.detections)[d].tag,
                                         std::move(points)});
            }
            return {Message::make("clouds", std::shared_ptr<const CloudBatch>(std::move(batch)),
                                  msg.provenance, scene.scene_id)};
        }};

    struct AssocAccumulator {
        std::shared_ptr<const Scene> scene;
        std::vector<DetectionCloud> clouds;
        std::vector<std::string> digests;
        std::size_t received = 0;
        std::size_t failures = 0;
        std::size_t total = std::numeric_limits<std::size_t>::max();
    };
    auto accumulators = std::make_shared<std::map<std::string, AssocAccumulator>>();
    auto acc_mutex = std::make_shared<std::mutex>();

    Stage associate{
        {"associate", "clouds", "fit_task", 1, config.parallelism.queue_capacity,
         /*sees_failures=*/true},
        [=](const Message& msg) -> std::vector<Message> {
            const std::string scene_id = msg.group;
            std::lock_guard lock(*acc_mutex);
            if (msg.failed) {
                if (scene_id.empty()) return {};
                ++(*accumulators)[scene_id].failures;
            } else {
                const auto& batch = msg.as<CloudBatch>();
                auto& acc = (*accumulators)[scene_id];
                acc.scene = batch.scene;
                acc.total = batch.total_frames;
                for (const auto& c : batch.clouds) acc.clouds.push_back(c);
                acc.digests.push_back(batch.input_digest);
                ++acc.received;
            }
            auto& acc = (*accumulators)[scene_id];
            if (acc.total == std::numeric_limits<std::size_t>::max() ||
                acc.received + acc.failures < acc.total)
                return {};

            std::sort(acc.digests.begin(), acc.digests.end());
            Sha256 h;
            for (const auto& d : acc.digests) h.update(d);
            const std::string key = FeatureCache::make_key("lift", h.hex(), lift_digest);

            std::vector<Message> out;
            if (auto hit = cache->get(key)) {
                const json cached = json::parse(*hit);
                const std::size_t total = cached.size();
                for (std::size_t g = 0; g < total; ++g) {
                    auto task = std::make_shared<const FitTask>(FitTask{
                        acc.scene, nullptr, {},
                        std::make_shared<const LiftedInstance>(instance_from_json(cached[g])),
                        g, total, key});
                    out.push_back(Message::make("fit_task", task,
                                                scene_id + "/group" + std::to_string(g),
                                                scene_id));
                }
                if (total == 0) {
                    auto task = std::make_shared<const FitTask>(
                        FitTask{acc.scene, nullptr, {}, nullptr, 0, 0, key});
                    out.push_back(Message::make("fit_task", task, scene_id + "/empty",
                                                scene_id));
                }
                accumulators->erase(scene_id);
                return out;
            }

            auto clouds = std::make_shared<const std::vector<DetectionCloud>>(
                std::move(acc.clouds));
            auto groups = associate_instances(*clouds, config.lift.iou_threshold);
            // drop groups that cannot reach min_points before fitting
            std::vector<std::vector<std::size_t>> kept;
            for (auto& g : groups) {
                std::size_t total_points = 0;
                for (const std::size_t i : g) total_points += (*clouds)[i].points.size();
                if (total_points >= config.lift.min_points) kept.push_back(std::move(g));
            }
            if (kept.empty()) {
                auto task = std::make_shared<const FitTask>(
                    FitTask{acc.scene, clouds, {}, nullptr, 0, 0, key});
                accumulators->erase(scene_id);
                return {Message::make("fit_task", task, scene_id + "/empty", scene_id)};
            }
            for (std::size_t g = 0; g < kept.size(); ++g) {
                auto task = std::make_shared<const FitTask>(FitTask{
                    acc.scene, clouds, kept[g], nullptr, g, kept.size(), key});
                out.push_back(Message::make("fit_task", task,
                                            scene_id + "/group" + std::to_string(g),
                                            scene_id));
            }
            accumulators->erase(scene_id);
            return out;
        }};

    Stage fit{{"fit", "fit_task", "instance", config.parallelism.extract_workers,
               config.parallelism.queue_capacity},
              [](const Message& msg) -> std::vector<Message> {
                  const auto& task = msg.as<FitTask>();
                  auto out = std::make_shared<SceneInstance>();
                  out->scene = task.scene;
                  out->group_index = task.group_index;
                  out->total_groups = task.total_groups;
                  out->scene_key = task.scene_key;
                  if (task.precomputed) {
                      out->instance = *task.precomputed;
                  } else if (!task.group.empty()) {
                      LiftedInstance inst;
                      std::map<std::string, int> votes;
                      for (const std::size_t idx : task.group) {
                          const auto& c = (*task.all_clouds)[idx];
                          inst.members.emplace_back(c.frame_id, c.detection_index);
                          inst.merged_cloud.insert(inst.merged_cloud.end(), c.points.begin(),
                                                   c.points.end());
                          ++votes[c.tag];
                      }
                      int best = 0;
                      for (const auto& [tag, n] : votes)
                          if (n > best || (n == best && (inst.tag.empty() || tag < inst.tag))) {
                              best = n;
                              inst.tag = tag;
                          }
                      inst.fitted_box = fit_obb(inst.merged_cloud);
                      inst.fitted_box.tag = inst.tag;
                      inst.fitted_box.metric = task.scene->depth_metric;
                      out->instance = std::move(inst);
                  }
                  return {Message::make("instance",
                                        std::shared_ptr<const SceneInstance>(std::move(out)),
                                        msg.provenance, msg.group)};
              }};

    struct EmitAccumulator {
        std::shared_ptr<const Scene> scene;
        std::map<std::size_t, LiftedInstance> instances;
        std::string scene_key;
        std::size_t failures = 0;
        std::size_t total = std::numeric_limits<std::size_t>::max();
    };
    auto emit_acc = std::make_shared<std::map<std::string, EmitAccumulator>>();
    auto emit_mutex = std::make_shared<std::mutex>();

    Stage emit{{"emit-scene", "instance", "lifted_scene", 1, config.parallelism.queue_capacity,
                /*sees_failures=*/true},
               [=](const Message& msg) -> std::vector<Message> {
                   const std::string scene_id = msg.group;
                   std::lock_guard lock(*emit_mutex);
                   if (msg.failed) {
                       if (scene_id.empty()) return {};
                       ++(*emit_acc)[scene_id].failures;
                   } else {
                       const auto& in = msg.as<SceneInstance>();
                       auto& acc = (*emit_acc)[scene_id];
                       acc.scene = in.scene;
                       acc.scene_key = in.scene_key;
                       acc.total = in.total_groups;
                       if (in.total_groups > 0)
                           acc.instances.emplace(in.group_index, in.instance);
                   }
                   auto& acc = (*emit_acc)[scene_id];
                   if (acc.total == std::numeric_limits<std::size_t>::max() ||
                       acc.instances.size() + acc.failures < acc.total)
                       return {};

                   // deterministic instance ids by group order
                   Scene lifted = *acc.scene;
                   lifted.boxes.clear();
                   lifted.source_tag = "lifted";
                   // the manifest moves to out_dir; re-anchor file references
                   for (auto& frame : lifted.frames) {
                       frame.image_ref =
                           fs::absolute(lifted.resolve_path(frame.image_ref)).string();
                       frame.depth_ref =
                           fs::absolute(lifted.resolve_path(frame.depth_ref)).string();
                   }
                   lifted.base_dir = out_dir;
                   std::map<std::string, int> tag_counters;
                   json cache_payload = json::array();
                   for (auto& [gi, inst] : acc.instances) {
                       if (inst.instance_id.empty()) {
                           char suffix[16];
                           std::snprintf(suffix, sizeof(suffix), "_%03d",
                                         tag_counters[inst.tag]++);
                           inst.instance_id = inst.tag + suffix;
                           inst.fitted_box.id = inst.instance_id;
                       }
                       lifted.boxes.push_back(inst.fitted_box);
                       cache_payload.push_back(instance_to_json(inst));
                   }
                   lifted.validate();
                   // partial results (quarantined groups) are not worth caching
                   if (cache->enabled() && !acc.scene_key.empty() && acc.failures == 0)
                       cache->put(acc.scene_key, cache_payload.dump());

                   fs::create_directories(out_dir);
                   const std::string manifest_path =
                       (fs::path(out_dir) / (scene_id + ".lifted.json")).string();
                   save_scene(lifted, manifest_path);
                   {
                       std::lock_guard out_lock(*out_mutex);
                       scenes_out->push_back(lifted);
                       written->push_back(manifest_path);
                   }
                   emit_acc->erase(scene_id);
                   return {};
               }};

    Pipeline pipeline = Pipeline::build({ingest, backproject, associate, fit, emit},
                                        config.error_ceiling);
    std::vector<Message> inputs;
    for (const auto& path : manifest_paths)
        inputs.push_back(Message::make("manifest", std::make_shared<const std::string>(path),
                                       path));
    const RunReport pipe_report = pipeline.run(std::move(inputs), [](Message&&) {});

    LiftRunOutput out;
    out.scenes = std::move(*scenes_out);
    out.manifests_written = std::move(*written);
    out.report = pipe_report.to_json();
    out.report["cache"] = {{"hits", cache->hits()}, {"misses", cache->misses()}};
    return out;
}

} // namespace spatialforge
