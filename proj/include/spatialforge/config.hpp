#pragma once

#include "spatialforge/adapters.hpp"
#include "spatialforge/attributes.hpp"
#include "spatialforge/lifting.hpp"
#include "spatialforge/qa_synthesis.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace spatialforge {

struct AdapterConfig {
    std::string type = "none"; // none | file | service
    std::string path;          // file-backed root / detections dir
    std::string url;           // service base URL
    int timeout_ms = 2000;
    int retries = 1;

    bool operator==(const AdapterConfig&) const = default;
};

struct ParallelismConfig {
    int load_workers = 1;
    int extract_workers = 2;
    int graph_workers = 2;
    int synth_workers = 2;
    int queue_capacity = 8;

    bool operator==(const ParallelismConfig&) const = default;
};

/// One declarative config for the whole engine. The master seed feeds every
/// per-record derivation; there is no ambient entropy anywhere.
struct EngineConfig {
    std::uint64_t seed = 0;
    ExtractConfig extract;
    QaConfig qa;
    LiftConfig lift;
    AdapterConfig mask_adapter;
    std::string mask_prompt = "box2d"; // box2d | mask | points
    AdapterConfig detection_adapter;
    ParallelismConfig parallelism;
    std::string cache_dir;
    std::string out_dir = "out";
    bool render_marked = true;
    double error_ceiling = 0.10;

    bool operator==(const EngineConfig&) const = default;

    /// Pushes the master seed into the per-module seeds.
    void propagate_seed();
    PromptKind prompt_kind() const;
    /// Digest over every field that affects extraction output (cache key part).
    std::string extract_config_digest() const;
    std::string lift_config_digest() const;
};

EngineConfig config_from_json(const nlohmann::json& j); // rejects unknown keys
nlohmann::json config_to_json(const EngineConfig& config);

EngineConfig load_config_file(const std::string& path);

/// SPATIALFORGE_* environment variables override file values; CLI flags are
/// applied on top by the caller.
void apply_env_overrides(EngineConfig& config);

} // namespace spatialforge
