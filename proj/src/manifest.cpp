#include "spatialforge/manifest.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace spatialforge {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw InputError(where + "/" + key, "missing field");
    return *it;
}

double number_at(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) throw InputError(where + "/" + key, "expected a number");
    return v.get<double>();
}

std::string string_at(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) throw InputError(where + "/" + key, "expected a string");
    return v.get<std::string>();
}

Vec3d vec3_at(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number())
        throw InputError(where + "/" + key, "expected an array of 3 numbers");
    return Vec3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

Mat3d mat3_at(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 9)
        throw InputError(where, "expected an array of 9 numbers (row-major 3x3)");
    Mat3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = v[std::size_t(3 * r + c)].get<double>();
    return m;
}

double unit_scale(const std::string& units) {
    if (units == "m" || units == "meters") return 1.0;
    if (units == "cm" || units == "centimeters") return 0.01;
    if (units == "mm" || units == "millimeters") return 0.001;
    throw InputError("/units", "unknown unit '" + units + "'");
}

DepthFormat depth_format_from(const std::string& s, const std::string& where) {
    if (s == "png16") return DepthFormat::Png16Millimeters;
    if (s == "f32") return DepthFormat::Float32Raw;
    throw InputError(where, "unknown depth_format '" + s + "'");
}

} // namespace

Scene scene_from_json(const json& j, const std::string& base_dir, const LoadOptions& opts) {
    Scene scene;
    scene.base_dir = base_dir;
    scene.scene_id = string_at(j, "scene_id", "");
    scene.units = j.value("units", std::string("m"));
    scene.source_tag = j.value("source_tag", std::string());
    scene.depth_metric = j.value("depth_metric", true);
    const double scale = unit_scale(scene.units);

    const json& frames = require(j, "frames", "");
    if (!frames.is_array()) throw InputError("/frames", "expected an array");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "/frames/" + std::to_string(i);
        const json& fj = frames[i];
        Frame f;
        f.frame_id = string_at(fj, "frame_id", where);
        f.image_ref = string_at(fj, "image", where);
        f.depth_ref = string_at(fj, "depth", where);
        f.depth_format =
            depth_format_from(fj.value("depth_format", std::string("png16")), where + "/depth_format");
        const json& kj = require(fj, "intrinsics", where);
        f.intrinsics.fx = number_at(kj, "fx", where + "/intrinsics");
        f.intrinsics.fy = number_at(kj, "fy", where + "/intrinsics");
        f.intrinsics.cx = number_at(kj, "cx", where + "/intrinsics");
        f.intrinsics.cy = number_at(kj, "cy", where + "/intrinsics");
        f.intrinsics.width = int(number_at(kj, "width", where + "/intrinsics"));
        f.intrinsics.height = int(number_at(kj, "height", where + "/intrinsics"));
        const json& pj = require(fj, "pose", where);
        f.pose.rotation = mat3_at(require(pj, "rotation", where + "/pose"), where + "/pose/rotation");
        f.pose.translation = vec3_at(pj, "translation", where + "/pose") * scale;
        if (fj.contains("timestamp")) f.timestamp = fj["timestamp"].get<double>();
        scene.frames.push_back(std::move(f));
    }

    const json& boxes = require(j, "boxes", "");
    if (!boxes.is_array()) throw InputError("/boxes", "expected an array");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const std::string where = "/boxes/" + std::to_string(i);
        const json& bj = boxes[i];
        ObbBox b;
        b.id = string_at(bj, "id", where);
        b.tag = string_at(bj, "tag", where);
        b.center = vec3_at(bj, "center", where) * scale;
        b.extents = vec3_at(bj, "extents", where) * scale;
        if (bj.contains("rpy")) {
            b.rpy = vec3_at(bj, "rpy", where);
        } else if (bj.contains("rotation")) {
            b.rpy = matrix_to_euler(mat3_at(bj["rotation"], where + "/rotation"));
        } else {
            throw InputError(where, "box needs either 'rpy' or 'rotation'");
        }
        const json& metric = require(bj, "metric", where);
        if (!metric.is_boolean()) throw InputError(where + "/metric", "expected a boolean");
        b.metric = metric.get<bool>();
        scene.boxes.push_back(std::move(b));
    }

    scene.units = "m"; // everything stored in meters after conversion
    scene.validate();

    if (opts.check_files) {
        for (std::size_t i = 0; i < scene.frames.size(); ++i) {
            const auto& f = scene.frames[i];
            if (!std::filesystem::exists(scene.resolve_path(f.image_ref)))
                throw InputError("/frames/" + std::to_string(i) + "/image",
                                 "file not found: " + f.image_ref);
            if (!std::filesystem::exists(scene.resolve_path(f.depth_ref)))
                throw InputError("/frames/" + std::to_string(i) + "/depth",
                                 "file not found: " + f.depth_ref);
        }
    }
    return scene;
}

json scene_to_json(const Scene& scene) {
    json j;
    j["scene_id"] = scene.scene_id;
    j["units"] = "m";
    j["source_tag"] = scene.source_tag;
    j["depth_metric"] = scene.depth_metric;
    j["frames"] = json::array();
    for (const auto& f : scene.frames) {
        json fj;
        fj["frame_id"] = f.frame_id;
        fj["image"] = f.image_ref;
        fj["depth"] = f.depth_ref;
        fj["depth_format"] = f.depth_format == DepthFormat::Png16Millimeters ? "png16" : "f32";
        fj["intrinsics"] = {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy},
                            {"cx", f.intrinsics.cx}, {"cy", f.intrinsics.cy},
                            {"width", f.intrinsics.width}, {"height", f.intrinsics.height}};
        json rot = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot.push_back(f.pose.rotation(r, c));
        fj["pose"] = {{"rotation", rot},
                      {"translation", {f.pose.translation.x(), f.pose.translation.y(),
                                       f.pose.translation.z()}}};
        if (f.timestamp) fj["timestamp"] = *f.timestamp;
        j["frames"].push_back(std::move(fj));
    }
    j["boxes"] = json::array();
    for (const auto& b : scene.boxes) {
        json bj;
        bj["id"] = b.id;
        bj["tag"] = b.tag;
        bj["center"] = {b.center.x(), b.center.y(), b.center.z()};
        bj["extents"] = {b.extents.x(), b.extents.y(), b.extents.z()};
        bj["rpy"] = {b.rpy.x(), b.rpy.y(), b.rpy.z()};
        bj["metric"] = b.metric;
        j["boxes"].push_back(std::move(bj));
    }
    return j;
}

Scene load_scene(const std::string& manifest_path, const LoadOptions& opts) {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open manifest: " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("manifest " + manifest_path + " is not valid JSON: " + e.what());
    }
    return scene_from_json(j, std::filesystem::path(manifest_path).parent_path().string(), opts);
}

void save_scene(const Scene& scene, const std::string& manifest_path) {
    std::ofstream out(manifest_path);
    if (!out) throw EngineError("cannot write manifest: " + manifest_path);
    out << scene_to_json(scene).dump(2) << "\n";
}

} // namespace spatialforge
