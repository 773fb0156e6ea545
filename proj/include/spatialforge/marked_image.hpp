#pragma once

#include "spatialforge/attributes.hpp"
#include "spatialforge/qa_records.hpp"
#include "spatialforge/scene.hpp"

#include <string>
#include <vector>

namespace spatialforge {

struct MarkStyle {
    int box_thickness = 2;
    int label_scale = 2; // 5x7 glyph cells, scaled
};

struct MarkedAnchor {
    std::string marker_label;       // single uppercase letter
    ProjectedBox2d box2d;
    const InstanceMask* mask = nullptr; // optional contour overlay
};

/// Copies the image to out_path with box outlines, mask contours and marker
/// labels drawn per anchor; colors are keyed by the marker label. Zero
/// anchors produce a byte-identical copy. Throws InputError on duplicate
/// labels, EngineError on unreadable images.
void render_marked_image(const std::string& image_path, const std::string& out_path,
                         const std::vector<MarkedAnchor>& anchors, const MarkStyle& style = {});

/// Renders every frame referenced by the record's anchors into
/// {out_dir}/{record_id}_{frame_id}.png. Returns the written paths.
/// Anchors must be visible in their frames.
std::vector<std::string> render_record_marks(const Scene& scene, const ObjectFrameIndex& index,
                                             const QaRecord& record, const std::string& out_dir,
                                             const MarkStyle& style = {});

} // namespace spatialforge
