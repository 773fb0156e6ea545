#pragma once

#include "spatialforge/types.hpp"

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

namespace spatialforge {

/// Content-addressed feature store: one file per key under the cache root,
/// payload prefixed by its own digest so corruption reads as a miss. Puts are
/// atomic (temp file + rename), so concurrent writers of the same key are
/// idempotent.
class FeatureCache {
public:
    explicit FeatureCache(std::string root = ""); // empty root disables the cache

    bool enabled() const { return !root_.empty(); }

    static std::string make_key(const std::string& stage_id, const std::string& input_digest,
                                const std::string& config_digest);

    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, const std::string& payload);

    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }

private:
    std::string entry_path(const std::string& key) const;

    std::string root_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
};

} // namespace spatialforge
