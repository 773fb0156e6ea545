#pragma once

#include "spatialforge/qa_synthesis.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <vector>

namespace spatialforge {

/// Recomputes a record's answer from raw boxes and poses through a separate
/// code path (no scene-graph caches). Throws EngineError for unknown
/// templates or malformed records.
std::string answer_oracle(const QaRecord& record, const Scene& scene,
                          const ObjectFrameIndex& index, const QaConfig& config);

struct ValidationIssue {
    std::string record_id;
    std::string kind; // answer_mismatch | anchor_invisible | option_rule | oracle_error
    std::string detail;
};

struct ValidationReport {
    std::size_t total = 0;
    std::size_t answer_mismatches = 0;
    std::size_t anchor_violations = 0;
    std::size_t option_violations = 0;
    std::size_t oracle_errors = 0;
    std::vector<ValidationIssue> issues;

    bool ok() const {
        return answer_mismatches + anchor_violations + option_violations + oracle_errors == 0;
    }
    nlohmann::json to_json() const;
};

ValidationReport validate_corpus(const std::vector<QaRecord>& records,
                                 const std::map<std::string, Scene>& scenes,
                                 const std::map<std::string, ObjectFrameIndex>& indices,
                                 const QaConfig& config);

} // namespace spatialforge
