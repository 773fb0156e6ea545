#pragma once

#include "spatialforge/attributes.hpp"
#include "spatialforge/config.hpp"

namespace spatialforge {

/// Exit codes: 0 success, 1 input error, 2 internal error.
int run_cli(int argc, const char* const* argv);

/// Sequential extract + index for one scene (used by `validate` and tests).
ObjectFrameIndex build_scene_index(const Scene& scene, const EngineConfig& config);

} // namespace spatialforge
