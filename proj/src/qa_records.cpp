#include "spatialforge/qa_records.hpp"

#include "spatialforge/util/sha256.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace spatialforge {

using nlohmann::json;

const char* task_name(Task t) {
    switch (t) {
    case Task::SM: return "SM";
    case Task::SR: return "SR";
    case Task::CP: return "CP";
    case Task::MC: return "MC";
    case Task::SAR: return "SAR";
    }
    return "?";
}

Task task_from_name(const std::string& name) {
    if (name == "SM") return Task::SM;
    if (name == "SR") return Task::SR;
    if (name == "CP") return Task::CP;
    if (name == "MC") return Task::MC;
    if (name == "SAR") return Task::SAR;
    throw InputError("unknown task '" + name + "'");
}

namespace {

json record_body(const QaRecord& r) {
    json j;
    j["task"] = task_name(r.task);
    j["subtask"] = r.subtask;
    j["question"] = r.question;
    j["answer"] = r.answer;
    if (!r.options.empty()) j["options"] = r.options;
    json anchors = json::array();
    for (const auto& a : r.anchors)
        anchors.push_back({{"frame_id", a.frame_id},
                           {"object_id", a.object_id},
                           {"marker_label", a.marker_label}});
    j["anchors"] = std::move(anchors);
    j["image_refs"] = r.image_refs;
    j["provenance"] = {{"scene_id", r.scene_id},
                       {"template_id", r.template_id},
                       {"seed", std::to_string(r.seed)}};
    return j;
}

} // namespace

std::string record_canonical(const QaRecord& r) { return record_body(r).dump(); }

std::string compute_record_id(const QaRecord& r) { return Sha256::hex_of(record_canonical(r)); }

void finalize_record(QaRecord& r) { r.record_id = compute_record_id(r); }

json record_to_json(const QaRecord& r) {
    json j = record_body(r);
    j["record_id"] = r.record_id;
    return j;
}

QaRecord record_from_json(const json& j) {
    QaRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.task = task_from_name(j.at("task").get<std::string>());
    r.subtask = j.at("subtask").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("options")) r.options = j.at("options").get<std::vector<std::string>>();
    for (const auto& aj : j.at("anchors"))
        r.anchors.push_back({aj.at("frame_id").get<std::string>(),
                             aj.at("object_id").get<std::string>(),
                             aj.at("marker_label").get<std::string>()});
    r.image_refs = j.at("image_refs").get<std::vector<std::string>>();
    const json& prov = j.at("provenance");
    r.scene_id = prov.at("scene_id").get<std::string>();
    r.template_id = prov.at("template_id").get<std::string>();
    r.seed = std::stoull(prov.at("seed").get<std::string>());
    return r;
}

std::vector<QaRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus: " + path);
    std::vector<QaRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const std::string& path, const std::vector<QaRecord>& records) {
    std::ofstream out(path);
    if (!out) throw EngineError("cannot write corpus: " + path);
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

} // namespace spatialforge
