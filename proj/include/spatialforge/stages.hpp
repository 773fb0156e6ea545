#pragma once

#include "spatialforge/cache.hpp"
#include "spatialforge/config.hpp"
#include "spatialforge/pipeline.hpp"
#include "spatialforge/qa_oracle.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace spatialforge {

/// QA production chain: load -> extract -> index -> graph -> sample-pairs ->
/// synthesize -> write. Extraction is cached per frame.
struct QaRunOutput {
    std::vector<QaRecord> records; // quota-applied, sorted by record_id
    std::map<std::string, Scene> scenes;
    std::map<std::string, ObjectFrameIndex> indices;
    nlohmann::json report;
};

QaRunOutput run_qa_pipeline(const std::vector<std::string>& manifest_paths,
                            const EngineConfig& config);

/// Lifting chain: detect-ingest -> backproject -> associate -> fit ->
/// emit-scene. The association + fit result is cached per scene.
struct LiftRunOutput {
    std::vector<Scene> scenes;
    std::vector<std::string> manifests_written;
    nlohmann::json report;
};

LiftRunOutput run_lift_pipeline(const std::vector<std::string>& manifest_paths,
                                const EngineConfig& config, const std::string& out_dir);

} // namespace spatialforge
