#pragma once

#include "spatialforge/qa_records.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <vector>

namespace spatialforge {

/// Corpus distribution report; doubles as the dataset-card generator.
struct CorpusStats {
    std::size_t total = 0;
    std::map<std::string, std::size_t> per_task;
    std::map<std::string, std::size_t> per_subtask;
    std::map<std::string, std::size_t> per_scene;
    std::map<std::string, std::size_t> per_source;  // needs scene -> source mapping
    std::map<std::string, std::size_t> answer_kind; // choice | numeric | text
};

CorpusStats compute_stats(const std::vector<QaRecord>& records,
                          const std::map<std::string, std::string>& scene_sources = {});

nlohmann::json stats_to_json(const CorpusStats& stats);
std::string stats_table(const CorpusStats& stats); // aligned text table

} // namespace spatialforge
