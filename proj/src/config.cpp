#include "spatialforge/config.hpp"

#include "spatialforge/util/sha256.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

namespace spatialforge {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!j.is_object()) throw InputError(where, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw InputError(where + "/" + key, "unknown config key");
}

template <class T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

AdapterConfig adapter_from_json(const json& j, const std::string& where) {
    reject_unknown(j, {"type", "path", "url", "timeout_ms", "retries"}, where);
    AdapterConfig a;
    get_to(j, "type", a.type);
    if (a.type != "none" && a.type != "file" && a.type != "service")
        throw InputError(where + "/type", "must be none, file, or service");
    get_to(j, "path", a.path);
    get_to(j, "url", a.url);
    get_to(j, "timeout_ms", a.timeout_ms);
    get_to(j, "retries", a.retries);
    return a;
}

json adapter_to_json(const AdapterConfig& a) {
    return json{{"type", a.type}, {"path", a.path}, {"url", a.url},
                {"timeout_ms", a.timeout_ms}, {"retries", a.retries}};
}

void check_range(bool ok, const std::string& where, const char* msg) {
    if (!ok) throw InputError(where, msg);
}

} // namespace

void EngineConfig::propagate_seed() {
    extract.global_seed = seed;
    qa.seed = seed;
    lift.global_seed = seed;
}

PromptKind EngineConfig::prompt_kind() const {
    if (mask_prompt == "box2d") return PromptKind::Box2d;
    if (mask_prompt == "mask") return PromptKind::Mask;
    if (mask_prompt == "points") return PromptKind::Points;
    throw InputError("/mask_prompt", "must be box2d, mask, or points");
}

std::string EngineConfig::extract_config_digest() const {
    json j;
    j["tau"] = extract.tau;
    j["occupancy_stride"] = extract.occupancy_stride;
    j["mask_stride"] = extract.mask_stride;
    j["containment_eps"] = extract.containment_eps;
    j["max_depth"] = extract.max_depth;
    j["cloud_cap"] = extract.cloud_cap;
    j["seed"] = seed;
    j["mask_adapter"] = adapter_to_json(mask_adapter);
    j["mask_prompt"] = mask_prompt;
    return Sha256::hex_of(j.dump());
}

std::string EngineConfig::lift_config_digest() const {
    json j;
    j["stride"] = lift.stride;
    j["knn_k"] = lift.knn_k;
    j["knn_sigma"] = lift.knn_sigma;
    j["iou_threshold"] = lift.iou_threshold;
    j["min_points"] = lift.min_points;
    j["max_points_per_detection"] = lift.max_points_per_detection;
    j["max_depth"] = lift.max_depth;
    j["seed"] = seed;
    j["detection_adapter"] = adapter_to_json(detection_adapter);
    return Sha256::hex_of(j.dump());
}

EngineConfig config_from_json(const json& j) {
    reject_unknown(j, {"seed", "extract", "qa", "lift", "mask_adapter", "mask_prompt",
                       "detection_adapter", "parallelism", "cache_dir", "out_dir",
                       "render_marked", "error_ceiling"},
                   "");
    EngineConfig c;
    if (j.contains("seed")) {
        if (j.at("seed").is_string())
            c.seed = std::stoull(j.at("seed").get<std::string>());
        else
            c.seed = j.at("seed").get<std::uint64_t>();
    }

    if (j.contains("extract")) {
        const json& e = j.at("extract");
        reject_unknown(e, {"tau", "occupancy_stride", "mask_stride", "containment_eps",
                           "max_depth", "cloud_cap"},
                       "/extract");
        get_to(e, "tau", c.extract.tau);
        get_to(e, "occupancy_stride", c.extract.occupancy_stride);
        get_to(e, "mask_stride", c.extract.mask_stride);
        get_to(e, "containment_eps", c.extract.containment_eps);
        get_to(e, "max_depth", c.extract.max_depth);
        get_to(e, "cloud_cap", c.extract.cloud_cap);
        check_range(c.extract.tau >= 0.0 && c.extract.tau <= 1.0, "/extract/tau",
                    "must be within [0, 1]");
        check_range(c.extract.occupancy_stride >= 1, "/extract/occupancy_stride", "must be >= 1");
        check_range(c.extract.mask_stride >= 1, "/extract/mask_stride", "must be >= 1");
        check_range(c.extract.max_depth > 0.0, "/extract/max_depth", "must be positive");
    }

    if (j.contains("qa")) {
        const json& q = j.at("qa");
        reject_unknown(q, {"margins", "tie_ratio", "k_min_shared", "min_yaw_delta_deg",
                           "max_pairs", "round_decimals", "sm_multiple_choice",
                           "bearing_margin_px", "bearing_skip_band_px", "near_max", "mid_max",
                           "class_skip_band", "rotation_none_max_deg",
                           "rotation_skip_band_deg", "motion_tie_ratio", "nearest_margin",
                           "order_margin_px", "grid_resolution", "grid_padding",
                           "traversability_per_scene", "quotas"},
                       "/qa");
        if (q.contains("margins")) {
            const json& m = q.at("margins");
            reject_unknown(m, {"lateral", "depth", "vertical"}, "/qa/margins");
            get_to(m, "lateral", c.qa.margins.lateral);
            get_to(m, "depth", c.qa.margins.depth);
            get_to(m, "vertical", c.qa.margins.vertical);
        }
        get_to(q, "tie_ratio", c.qa.tie_ratio);
        get_to(q, "k_min_shared", c.qa.k_min_shared);
        get_to(q, "min_yaw_delta_deg", c.qa.min_yaw_delta_deg);
        get_to(q, "max_pairs", c.qa.max_pairs);
        get_to(q, "round_decimals", c.qa.round_decimals);
        get_to(q, "sm_multiple_choice", c.qa.sm_multiple_choice);
        get_to(q, "bearing_margin_px", c.qa.bearing_margin_px);
        get_to(q, "bearing_skip_band_px", c.qa.bearing_skip_band_px);
        get_to(q, "near_max", c.qa.near_max);
        get_to(q, "mid_max", c.qa.mid_max);
        get_to(q, "class_skip_band", c.qa.class_skip_band);
        get_to(q, "rotation_none_max_deg", c.qa.rotation_none_max_deg);
        get_to(q, "rotation_skip_band_deg", c.qa.rotation_skip_band_deg);
        get_to(q, "motion_tie_ratio", c.qa.motion_tie_ratio);
        get_to(q, "nearest_margin", c.qa.nearest_margin);
        get_to(q, "order_margin_px", c.qa.order_margin_px);
        get_to(q, "grid_resolution", c.qa.grid_resolution);
        get_to(q, "grid_padding", c.qa.grid_padding);
        get_to(q, "traversability_per_scene", c.qa.traversability_per_scene);
        check_range(c.qa.k_min_shared >= 1, "/qa/k_min_shared", "must be >= 1");
        check_range(c.qa.grid_resolution > 0.0, "/qa/grid_resolution", "must be positive");
        check_range(c.qa.tie_ratio >= 1.0, "/qa/tie_ratio", "must be >= 1");
        if (q.contains("quotas")) {
            for (const auto& [subtask, quota] : q.at("quotas").items()) {
                bool known = false;
                for (const auto& [name, task] : subtask_roster())
                    if (name == subtask) known = true;
                if (!known) throw InputError("/qa/quotas/" + subtask, "unknown sub-task");
                c.qa.subtask_quota[subtask] = quota.get<int>();
            }
        }
    }

    if (j.contains("lift")) {
        const json& l = j.at("lift");
        reject_unknown(l, {"stride", "knn_k", "knn_sigma", "iou_threshold", "min_points",
                           "max_points_per_detection", "max_depth"},
                       "/lift");
        get_to(l, "stride", c.lift.stride);
        get_to(l, "knn_k", c.lift.knn_k);
        get_to(l, "knn_sigma", c.lift.knn_sigma);
        get_to(l, "iou_threshold", c.lift.iou_threshold);
        get_to(l, "min_points", c.lift.min_points);
        get_to(l, "max_points_per_detection", c.lift.max_points_per_detection);
        get_to(l, "max_depth", c.lift.max_depth);
        check_range(c.lift.stride >= 1, "/lift/stride", "must be >= 1");
        check_range(c.lift.iou_threshold >= 0.0 && c.lift.iou_threshold <= 1.0,
                    "/lift/iou_threshold", "must be within [0, 1]");
    }

    if (j.contains("mask_adapter"))
        c.mask_adapter = adapter_from_json(j.at("mask_adapter"), "/mask_adapter");
    get_to(j, "mask_prompt", c.mask_prompt);
    if (j.contains("detection_adapter"))
        c.detection_adapter = adapter_from_json(j.at("detection_adapter"), "/detection_adapter");

    if (j.contains("parallelism")) {
        const json& p = j.at("parallelism");
        reject_unknown(p, {"load_workers", "extract_workers", "graph_workers", "synth_workers",
                           "queue_capacity"},
                       "/parallelism");
        get_to(p, "load_workers", c.parallelism.load_workers);
        get_to(p, "extract_workers", c.parallelism.extract_workers);
        get_to(p, "graph_workers", c.parallelism.graph_workers);
        get_to(p, "synth_workers", c.parallelism.synth_workers);
        get_to(p, "queue_capacity", c.parallelism.queue_capacity);
        check_range(c.parallelism.extract_workers >= 1, "/parallelism/extract_workers",
                    "must be >= 1");
        check_range(c.parallelism.queue_capacity >= 1, "/parallelism/queue_capacity",
                    "must be >= 1");
    }

    get_to(j, "cache_dir", c.cache_dir);
    get_to(j, "out_dir", c.out_dir);
    get_to(j, "render_marked", c.render_marked);
    get_to(j, "error_ceiling", c.error_ceiling);
    check_range(c.error_ceiling >= 0.0 && c.error_ceiling <= 1.0, "/error_ceiling",
                "must be within [0, 1]");

    c.prompt_kind(); // validates mask_prompt
    c.propagate_seed();
    return c;
}

json config_to_json(const EngineConfig& c) {
    json j;
    j["seed"] = std::to_string(c.seed);
    j["extract"] = {{"tau", c.extract.tau},
                    {"occupancy_stride", c.extract.occupancy_stride},
                    {"mask_stride", c.extract.mask_stride},
                    {"containment_eps", c.extract.containment_eps},
                    {"max_depth", c.extract.max_depth},
                    {"cloud_cap", c.extract.cloud_cap}};
    json quotas = json::object();
    for (const auto& [subtask, quota] : c.qa.subtask_quota) quotas[subtask] = quota;
    j["qa"] = {{"margins",
                {{"lateral", c.qa.margins.lateral},
                 {"depth", c.qa.margins.depth},
                 {"vertical", c.qa.margins.vertical}}},
               {"tie_ratio", c.qa.tie_ratio},
               {"k_min_shared", c.qa.k_min_shared},
               {"min_yaw_delta_deg", c.qa.min_yaw_delta_deg},
               {"max_pairs", c.qa.max_pairs},
               {"round_decimals", c.qa.round_decimals},
               {"sm_multiple_choice", c.qa.sm_multiple_choice},
               {"bearing_margin_px", c.qa.bearing_margin_px},
               {"bearing_skip_band_px", c.qa.bearing_skip_band_px},
               {"near_max", c.qa.near_max},
               {"mid_max", c.qa.mid_max},
               {"class_skip_band", c.qa.class_skip_band},
               {"rotation_none_max_deg", c.qa.rotation_none_max_deg},
               {"rotation_skip_band_deg", c.qa.rotation_skip_band_deg},
               {"motion_tie_ratio", c.qa.motion_tie_ratio},
               {"nearest_margin", c.qa.nearest_margin},
               {"order_margin_px", c.qa.order_margin_px},
               {"grid_resolution", c.qa.grid_resolution},
               {"grid_padding", c.qa.grid_padding},
               {"traversability_per_scene", c.qa.traversability_per_scene},
               {"quotas", quotas}};
    j["lift"] = {{"stride", c.lift.stride},
                 {"knn_k", c.lift.knn_k},
                 {"knn_sigma", c.lift.knn_sigma},
                 {"iou_threshold", c.lift.iou_threshold},
                 {"min_points", c.lift.min_points},
                 {"max_points_per_detection", c.lift.max_points_per_detection},
                 {"max_depth", c.lift.max_depth}};
    j["mask_adapter"] = adapter_to_json(c.mask_adapter);
    j["mask_prompt"] = c.mask_prompt;
    j["detection_adapter"] = adapter_to_json(c.detection_adapter);
    j["parallelism"] = {{"load_workers", c.parallelism.load_workers},
                        {"extract_workers", c.parallelism.extract_workers},
                        {"graph_workers", c.parallelism.graph_workers},
                        {"synth_workers", c.parallelism.synth_workers},
                        {"queue_capacity", c.parallelism.queue_capacity}};
    j["cache_dir"] = c.cache_dir;
    j["out_dir"] = c.out_dir;
    j["render_marked"] = c.render_marked;
    j["error_ceiling"] = c.error_ceiling;
    return j;
}

EngineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void apply_env_overrides(EngineConfig& c) {
    auto env = [](const char* name) -> const char* { return std::getenv(name); };
    if (const char* v = env("SPATIALFORGE_SEED")) c.seed = std::stoull(v);
    if (const char* v = env("SPATIALFORGE_TAU")) c.extract.tau = std::stod(v);
    if (const char* v = env("SPATIALFORGE_WORKERS")) {
        const int n = std::stoi(v);
        c.parallelism.extract_workers = n;
        c.parallelism.graph_workers = n;
        c.parallelism.synth_workers = n;
    }
    if (const char* v = env("SPATIALFORGE_QUEUE_CAPACITY"))
        c.parallelism.queue_capacity = std::stoi(v);
    if (const char* v = env("SPATIALFORGE_CACHE_DIR")) c.cache_dir = v;
    if (const char* v = env("SPATIALFORGE_OUT")) c.out_dir = v;
    if (const char* v = env("SPATIALFORGE_MIN_SHARED")) c.qa.k_min_shared = std::stoi(v);
    if (const char* v = env("SPATIALFORGE_MIN_YAW_DELTA"))
        c.qa.min_yaw_delta_deg = std::stod(v);
    if (const char* v = env("SPATIALFORGE_RENDER_MARKED"))
        c.render_marked = std::string(v) != "0";
    c.propagate_seed();
}

} // namespace spatialforge
