#include "spatialforge/stats.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <sstream>

namespace spatialforge {

namespace {

bool looks_numeric(const std::string& answer) {
    std::string body = answer;
    if (body.size() > 2 && body.substr(body.size() - 2) == " m")
        body = body.substr(0, body.size() - 2);
    if (body.empty()) return false;
    bool digit = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
        else if (c == '.' || (c == '-' && i == 0)) continue;
        else return false;
    }
    return digit;
}

} // namespace

CorpusStats compute_stats(const std::vector<QaRecord>& records,
                          const std::map<std::string, std::string>& scene_sources) {
    CorpusStats s;
    for (const auto& r : records) {
        ++s.total;
        ++s.per_task[task_name(r.task)];
        ++s.per_subtask[r.subtask];
        ++s.per_scene[r.scene_id];
        auto src = scene_sources.find(r.scene_id);
        ++s.per_source[src != scene_sources.end() ? src->second : std::string("unknown")];
        if (r.is_choice())
            ++s.answer_kind["choice"];
        else if (looks_numeric(r.answer))
            ++s.answer_kind["numeric"];
        else
            ++s.answer_kind["text"];
    }
    return s;
}

nlohmann::json stats_to_json(const CorpusStats& s) {
    nlohmann::json j;
    j["total"] = s.total;
    j["per_task"] = s.per_task;
    j["per_subtask"] = s.per_subtask;
    j["per_scene"] = s.per_scene;
    j["per_source"] = s.per_source;
    j["answer_kind"] = s.answer_kind;
    return j;
}

std::string stats_table(const CorpusStats& s) {
    std::ostringstream out;
    auto section = [&](const char* title, const std::map<std::string, std::size_t>& rows) {
        out << title << "\n";
        std::size_t width = 4;
        for (const auto& [key, n] : rows) width = std::max(width, key.size());
        for (const auto& [key, n] : rows) {
            out << "  " << key;
            for (std::size_t i = key.size(); i < width + 2; ++i) out << ' ';
            out << n << "\n";
        }
        if (rows.empty()) out << "  (none)\n";
    };
    out << "records  " << s.total << "\n";
    section("by task", s.per_task);
    section("by sub-task", s.per_subtask);
    section("by scene", s.per_scene);
    section("by source", s.per_source);
    section("by answer kind", s.answer_kind);
    return out.str();
}

} // namespace spatialforge
