#pragma once

#include "spatialforge/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace spatialforge {

/// Blocking MPMC queue with bounded capacity; producers block when full
/// (back-pressure), consumers block until an item arrives or the queue is
/// closed and drained.
template <class T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

    void push(T item) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return; // aborted run: drop silently
        items_.push_back(std::move(item));
        high_water_ = std::max(high_water_, items_.size());
        not_empty_.notify_one();
    }

    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    std::size_t high_water_mark() const {
        std::lock_guard lock(mutex_);
        return high_water_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    std::size_t capacity_;
    std::size_t high_water_ = 0;
    bool closed_ = false;
};

/// Untyped work item; the `kind` string is the wire contract between stages.
/// When an item fails mid-chain the executor forwards a `failed` tombstone in
/// its place so aggregation stages can still reach their completion counts.
struct Message {
    std::string kind;
    std::shared_ptr<const void> payload;
    std::string provenance; // scene/frame identity for error quarantine
    std::string group;      // aggregation key (scene id), survives into tombstones
    bool failed = false;

    template <class T> const T& as() const { return *static_cast<const T*>(payload.get()); }
    template <class T>
    static Message make(std::string kind, std::shared_ptr<const T> payload,
                        std::string provenance, std::string group = "") {
        return Message{std::move(kind), std::static_pointer_cast<const void>(std::move(payload)),
                       std::move(provenance), std::move(group), false};
    }
};

struct StageSpec {
    std::string stage_id;
    std::string input_kind;
    std::string output_kind;
    int worker_count = 1;
    int queue_capacity = 8;
    bool sees_failures = false; // aggregators opt in to receive tombstones
};

using StageFn = std::function<std::vector<Message>(const Message&)>;

struct Stage {
    StageSpec spec;
    StageFn fn;
};

struct QuarantinedItem {
    std::string stage_id;
    std::string provenance;
    std::string error;
};

struct StageReport {
    std::string stage_id;
    std::uint64_t items_in = 0;
    std::uint64_t items_ok = 0; // items_ok + errors == items_in, always
    std::uint64_t errors = 0;
    std::uint64_t emitted = 0;
    double busy_ms = 0.0;
    double wall_ms = 0.0;
    std::size_t queue_high_water = 0;
};

struct RunReport {
    std::vector<StageReport> stages;
    std::vector<QuarantinedItem> quarantined;
    double wall_ms = 0.0;
    bool aborted = false;
    std::string abort_reason;

    nlohmann::json to_json() const;
};

/// A validated linear stage chain (a path DAG) with one bounded queue per
/// stage and per-stage worker pools. Per-item failures are quarantined, never
/// fatal, unless a stage's error rate exceeds the ceiling.
class Pipeline {
public:
    /// Validates the chain: at least one stage, unique stage ids (a repeated
    /// stage would revisit itself), kind-compatible consecutive edges.
    static Pipeline build(std::vector<Stage> stages, double error_ceiling = 0.10);

    std::size_t stage_count() const { return stages_.size(); }
    const StageSpec& spec(std::size_t i) const { return stages_[i].spec; }

    /// Feeds the inputs through the chain; `sink` receives final-stage output
    /// messages (called serially). Returns the per-stage report.
    RunReport run(std::vector<Message> inputs, const std::function<void(Message&&)>& sink);

private:
    Pipeline() = default;
    std::vector<Stage> stages_;
    double error_ceiling_ = 0.10;
};

} // namespace spatialforge
