#pragma once

#include "spatialforge/attributes.hpp"
#include "spatialforge/mask.hpp"
#include "spatialforge/scene.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spatialforge {

enum class PromptKind { Box2d, Mask, Points };

struct RefinePrompt {
    PromptKind kind = PromptKind::Box2d;
    std::vector<double> box2d;                  // [min_u, min_v, max_u, max_v]
    InstanceMask mask;                          // coarse mask prompt
    std::vector<std::pair<int, int>> keypoints; // sampled (u, v) prompts
};

/// Boundary where an external segmenter plugs in. Implementations must be
/// safe for concurrent in-flight calls.
class MaskRefinementAdapter {
public:
    virtual ~MaskRefinementAdapter() = default;
    /// Returns the refined mask, or nullopt when no refinement is available
    /// for this (scene, frame, object). Throws EngineError on timeouts or
    /// contract violations (wrong dimensions, malformed response).
    virtual std::optional<InstanceMask> refine(const std::string& scene_id,
                                               const std::string& frame_id,
                                               const std::string& object_id,
                                               const std::string& image_path,
                                               const RefinePrompt& prompt) = 0;
};

/// Reads precomputed masks from {root}/{scene_id}/{frame_id}/{object_id}.png.
std::unique_ptr<MaskRefinementAdapter> make_file_mask_adapter(const std::string& root);

/// POSTs /refine to an HTTP segmentation service.
std::unique_ptr<MaskRefinementAdapter> make_service_mask_adapter(const std::string& base_url,
                                                                 int timeout_ms, int retries);

/// Applies the adapter to every record; failures set refinement_failed and
/// keep the coarse mask. A null adapter leaves records untouched.
void apply_mask_refinement(const Scene& scene, const Frame& frame,
                           std::vector<FrameObjectAttributes>& records,
                           MaskRefinementAdapter* adapter, PromptKind prompt_kind);

/// Output contract of the external recognizer + segmenter pair.
struct ViewDetection {
    std::string tag;
    double confidence = 1.0;
    InstanceMask mask;
};

class DetectionAdapter {
public:
    virtual ~DetectionAdapter() = default;
    virtual std::vector<ViewDetection> detect(const Scene& scene, const Frame& frame) = 0;
};

/// Reads {dir}/{frame_id}.detections.json files.
std::unique_ptr<DetectionAdapter> make_file_detection_adapter(const std::string& dir);

/// POSTs /detect to an HTTP recognition service.
std::unique_ptr<DetectionAdapter> make_service_detection_adapter(const std::string& base_url,
                                                                 int timeout_ms, int retries);

std::vector<ViewDetection> parse_detections_json(const std::string& text, int expect_width,
                                                 int expect_height);

} // namespace spatialforge
