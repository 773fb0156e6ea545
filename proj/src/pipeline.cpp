#include "spatialforge/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

namespace spatialforge {

using Clock = std::chrono::steady_clock;

nlohmann::json RunReport::to_json() const {
    nlohmann::json j;
    j["wall_ms"] = wall_ms;
    j["aborted"] = aborted;
    if (aborted) j["abort_reason"] = abort_reason;
    nlohmann::json stages_json = nlohmann::json::array();
    for (const auto& s : stages) {
        stages_json.push_back({{"stage_id", s.stage_id},
                               {"items_in", s.items_in},
                               {"items_out", s.items_ok},
                               {"errors", s.errors},
                               {"emitted", s.emitted},
                               {"busy_ms", s.busy_ms},
                               {"wall_ms", s.wall_ms},
                               {"queue_high_water", s.queue_high_water}});
    }
    j["stages"] = std::move(stages_json);
    nlohmann::json errors_json = nlohmann::json::array();
    for (const auto& q : quarantined)
        errors_json.push_back({{"stage_id", q.stage_id},
                               {"provenance", q.provenance},
                               {"error", q.error}});
    j["quarantined"] = std::move(errors_json);
    return j;
}

Pipeline Pipeline::build(std::vector<Stage> stages, double error_ceiling) {
    if (stages.empty()) throw InputError("pipeline has zero stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        for (std::size_t j = i + 1; j < stages.size(); ++j)
            if (stages[i].spec.stage_id == stages[j].spec.stage_id)
                throw InputError("stage '" + stages[i].spec.stage_id +
                                 "' appears twice; the chain would revisit it (cycle)");
        if (stages[i].spec.worker_count < 1)
            throw InputError("stage '" + stages[i].spec.stage_id + "' needs >= 1 worker");
        if (stages[i].spec.queue_capacity < 1)
            throw InputError("stage '" + stages[i].spec.stage_id + "' needs queue capacity >= 1");
    }
    for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
        if (stages[i].spec.output_kind != stages[i + 1].spec.input_kind)
            throw InputError("kind mismatch: stage '" + stages[i].spec.stage_id + "' emits '" +
                             stages[i].spec.output_kind + "' but stage '" +
                             stages[i + 1].spec.stage_id + "' consumes '" +
                             stages[i + 1].spec.input_kind + "'");
    }
    Pipeline p;
    p.stages_ = std::move(stages);
    p.error_ceiling_ = error_ceiling;
    return p;
}

RunReport Pipeline::run(std::vector<Message> inputs,
                        const std::function<void(Message&&)>& sink) {
    const auto t_start = Clock::now();
    const std::size_t n = stages_.size();

    std::vector<std::unique_ptr<BoundedQueue<Message>>> queues;
    for (std::size_t i = 0; i < n; ++i)
        queues.push_back(std::make_unique<BoundedQueue<Message>>(stages_[i].spec.queue_capacity));

    struct StageState {
        std::atomic<std::uint64_t> items_in{0};
        std::atomic<std::uint64_t> items_ok{0};
        std::atomic<std::uint64_t> errors{0};
        std::atomic<std::uint64_t> emitted{0};
        std::atomic<std::uint64_t> busy_us{0};
        std::atomic<int> live_workers{0};
        std::atomic<std::int64_t> first_pop_us{-1};
        std::atomic<std::int64_t> last_exit_us{0};
    };
    std::vector<StageState> state(n);

    std::mutex sink_mutex;
    std::mutex quarantine_mutex;
    std::vector<QuarantinedItem> quarantined;
    std::atomic<bool> abort{false};
    std::string abort_reason;
    std::mutex abort_mutex;

    auto us_since_start = [&] {
        return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t_start)
            .count();
    };

    std::vector<std::thread> workers;
    for (std::size_t si = 0; si < n; ++si) {
        const Stage& stage = stages_[si];
        state[si].live_workers = stage.spec.worker_count;
        for (int w = 0; w < stage.spec.worker_count; ++w) {
            workers.emplace_back([&, si] {
                const Stage& st = stages_[si];
                StageState& ss = state[si];
                auto forward = [&](Message&& out) {
                    if (si + 1 < n) {
                        queues[si + 1]->push(std::move(out));
                    } else {
                        std::lock_guard lock(sink_mutex);
                        sink(std::move(out));
                    }
                };
                auto tombstone = [&](const Message& source) {
                    return Message{st.spec.output_kind, nullptr, source.provenance,
                                   source.group, true};
                };
                while (true) {
                    auto msg = queues[si]->pop();
                    if (!msg) break;
                    std::int64_t expected = -1;
                    ss.first_pop_us.compare_exchange_strong(expected, us_since_start());
                    if (abort.load()) continue; // drain without processing
                    if (msg->failed && !st.spec.sees_failures) {
                        forward(tombstone(*msg)); // pass the marker along, not an item
                        continue;
                    }
                    ss.items_in.fetch_add(1);
                    const auto t0 = Clock::now();
                    try {
                        auto outputs = st.fn(*msg);
                        ss.items_ok.fetch_add(1);
                        ss.emitted.fetch_add(outputs.size());
                        for (auto& out : outputs) forward(std::move(out));
                    } catch (const std::exception& e) {
                        ss.errors.fetch_add(1);
                        {
                            std::lock_guard lock(quarantine_mutex);
                            quarantined.push_back({st.spec.stage_id, msg->provenance, e.what()});
                        }
                        forward(tombstone(*msg));
                        const std::uint64_t in = ss.items_in.load();
                        if (in >= 10 &&
                            double(ss.errors.load()) > error_ceiling_ * double(in) &&
                            !abort.exchange(true)) {
                            std::lock_guard lock(abort_mutex);
                            abort_reason = "error rate above ceiling in stage '" +
                                           st.spec.stage_id + "'";
                            for (auto& q : queues) q->close();
                        }
                    }
                    ss.busy_us.fetch_add(std::chrono::duration_cast<std::chrono::microseconds>(
                                             Clock::now() - t0)
                                             .count());
                }
                ss.last_exit_us.store(us_since_start());
                // the last worker out propagates end-of-stream downstream
                if (ss.live_workers.fetch_sub(1) == 1 && si + 1 < n) queues[si + 1]->close();
            });
        }
    }

    for (auto& msg : inputs) queues[0]->push(std::move(msg));
    queues[0]->close();
    for (auto& t : workers) t.join();

    RunReport report;
    report.wall_ms = us_since_start() / 1000.0;
    report.aborted = abort.load();
    report.abort_reason = abort_reason;
    report.quarantined = std::move(quarantined);
    for (std::size_t si = 0; si < n; ++si) {
        StageReport sr;
        sr.stage_id = stages_[si].spec.stage_id;
        sr.items_in = state[si].items_in.load();
        sr.items_ok = state[si].items_ok.load();
        sr.errors = state[si].errors.load();
        sr.emitted = state[si].emitted.load();
        sr.busy_ms = state[si].busy_us.load() / 1000.0;
        const auto first = state[si].first_pop_us.load();
        sr.wall_ms = first < 0 ? 0.0 : (state[si].last_exit_us.load() - first) / 1000.0;
        sr.queue_high_water = queues[si]->high_water_mark();
        report.stages.push_back(std::move(sr));
    }
    if (report.aborted) throw EngineError("pipeline aborted: " + report.abort_reason);
    return report;
}

} // namespace spatialforge
