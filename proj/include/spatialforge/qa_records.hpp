#pragma once

#include "spatialforge/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace spatialforge {

enum class Task { SM, SR, CP, MC, SAR };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

struct QaAnchor {
    std::string frame_id;
    std::string object_id;
    std::string marker_label;

    bool operator==(const QaAnchor&) const = default;
};

/// One generated sample. record_id is the lowercase hex SHA-256 of the
/// canonical serialization of every other field.
struct QaRecord {
    std::string record_id;
    Task task = Task::SM;
    std::string subtask;
    std::string question;
    std::string answer;
    std::vector<std::string> options; // empty for open-ended records
    std::vector<QaAnchor> anchors;
    std::vector<std::string> image_refs; // 1 or 2 frame ids
    // provenance
    std::string scene_id;
    std::string template_id;
    std::uint64_t seed = 0;

    bool is_choice() const { return !options.empty(); }
};

nlohmann::json record_to_json(const QaRecord& r);
QaRecord record_from_json(const nlohmann::json& j);

/// Canonical bytes hashed into record_id (sorted keys, record_id excluded).
std::string record_canonical(const QaRecord& r);
std::string compute_record_id(const QaRecord& r);

/// Sets record_id from the canonical hash.
void finalize_record(QaRecord& r);

std::vector<QaRecord> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<QaRecord>& records);

} // namespace spatialforge
