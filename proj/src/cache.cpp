#include "spatialforge/cache.hpp"

#include "spatialforge/util/sha256.hpp"

#include <filesystem>
#include <fstream>
#include <random>

namespace spatialforge {

namespace fs = std::filesystem;

FeatureCache::FeatureCache(std::string root) : root_(std::move(root)) {
    if (!root_.empty()) fs::create_directories(root_);
}

std::string FeatureCache::make_key(const std::string& stage_id, const std::string& input_digest,
                                   const std::string& config_digest) {
    Sha256 h;
    h.update(stage_id);
    h.update("|");
    h.update(input_digest);
    h.update("|");
    h.update(config_digest);
    h.update("|");
    h.update(kEngineVersion);
    return h.hex();
}

std::string FeatureCache::entry_path(const std::string& key) const {
    return (fs::path(root_) / key.substr(0, 2) / (key + ".entry")).string();
}

std::optional<std::string> FeatureCache::get(const std::string& key) {
    if (!enabled()) return std::nullopt;
    const std::string path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    std::string digest(64, '\0');
    in.read(digest.data(), 64);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) {
        ++misses_;
        return std::nullopt;
    }
    if (Sha256::hex_of(payload) != digest) { // corrupt entry: evict, report miss
        in.close();
        std::error_code ec;
        fs::remove(path, ec);
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return payload;
}

void FeatureCache::put(const std::string& key, const std::string& payload) {
    if (!enabled()) return;
    const fs::path path = entry_path(key);
    fs::create_directories(path.parent_path());
    static std::atomic<std::uint64_t> counter{0};
    const fs::path tmp = path.parent_path() /
                         (key + ".tmp." + std::to_string(std::random_device{}()) + "." +
                          std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw EngineError("cache not writable: " + tmp.string());
        out << Sha256::hex_of(payload) << payload;
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) { // another writer won the race; same key means same content
        fs::remove(tmp, ec);
    }
}

} // namespace spatialforge
