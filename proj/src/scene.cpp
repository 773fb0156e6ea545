#include "spatialforge/scene.hpp"

#include <cmath>
#include <filesystem>
#include <set>

namespace spatialforge {

void ObbBox::validate_and_normalize(const std::string& where) {
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(extents[i]) || extents[i] <= 0.0)
            throw InputError(where, "non-positive extent");
        if (!std::isfinite(center[i])) throw InputError(where, "non-finite center");
        if (!std::isfinite(rpy[i])) throw InputError(where, "non-finite rotation");
    }
    rpy.z() = wrap_angle(rpy.z());
    if (id.empty()) throw InputError(where, "empty object id");
}

void CameraIntrinsics::validate(const std::string& where) const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InputError(where, "focal length must be positive");
    if (width <= 0 || height <= 0) throw InputError(where, "image size must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
        throw InputError(where, "principal point outside image");
}

void CameraPose::validate(const std::string& where) const {
    const Mat3d err = rotation.transpose() * rotation - Mat3d::Identity();
    if (err.cwiseAbs().maxCoeff() > 1e-6)
        throw InputError(where, "rotation is not orthonormal");
    if (rotation.determinant() < 0.0)
        throw InputError(where, "rotation has negative determinant");
    for (int i = 0; i < 3; ++i)
        if (!std::isfinite(translation[i])) throw InputError(where, "non-finite translation");
}

const Frame* Scene::find_frame(const std::string& frame_id) const {
    for (const auto& f : frames)
        if (f.frame_id == frame_id) return &f;
    return nullptr;
}

const ObbBox* Scene::find_box(const std::string& box_id) const {
    for (const auto& b : boxes)
        if (b.id == box_id) return &b;
    return nullptr;
}

std::string Scene::resolve_path(const std::string& ref) const {
    std::filesystem::path p(ref);
    if (p.is_absolute() || base_dir.empty()) return ref;
    return (std::filesystem::path(base_dir) / p).string();
}

void Scene::validate() {
    if (scene_id.empty()) throw InputError("/scene_id", "empty scene id");
    std::set<std::string> frame_ids;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "/frames/" + std::to_string(i);
        auto& f = frames[i];
        if (f.frame_id.empty()) throw InputError(where + "/frame_id", "empty frame id");
        if (!frame_ids.insert(f.frame_id).second)
            throw InputError(where + "/frame_id", "duplicate frame id '" + f.frame_id + "'");
        f.intrinsics.validate(where + "/intrinsics");
        f.pose.validate(where + "/pose");
    }
    std::set<std::string> box_ids;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const std::string where = "/boxes/" + std::to_string(i);
        auto& b = boxes[i];
        b.validate_and_normalize(where);
        if (!box_ids.insert(b.id).second)
            throw InputError(where + "/id", "duplicate object id '" + b.id + "'");
    }
}

} // namespace spatialforge
