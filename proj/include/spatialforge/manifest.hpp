#pragma once

#include "spatialforge/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace spatialforge {

struct LoadOptions {
    bool check_files = true; // verify referenced image/depth files exist at load time
};

Scene scene_from_json(const nlohmann::json& j, const std::string& base_dir,
                      const LoadOptions& opts = {});
nlohmann::json scene_to_json(const Scene& scene);

Scene load_scene(const std::string& manifest_path, const LoadOptions& opts = {});
void save_scene(const Scene& scene, const std::string& manifest_path);

} // namespace spatialforge
