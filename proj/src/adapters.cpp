#include "spatialforge/adapters.hpp"

#include "spatialforge/image_io.hpp"
#include "spatialforge/util/rng.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace spatialforge {

using nlohmann::json;

namespace {

class FileMaskAdapter final : public MaskRefinementAdapter {
public:
    explicit FileMaskAdapter(std::string root) : root_(std::move(root)) {}

    std::optional<InstanceMask> refine(const std::string& scene_id, const std::string& frame_id,
                                       const std::string& object_id, const std::string&,
                                       const RefinePrompt&) override {
        const auto path = std::filesystem::path(root_) / scene_id / frame_id / (object_id + ".png");
        if (!std::filesystem::exists(path)) return std::nullopt;
        const ImageU8 img = read_png_u8(path.string());
        if (img.channels != 1) throw EngineError("refine mask must be grayscale: " + path.string());
        std::vector<std::uint8_t> bits(img.pixels.size());
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = img.pixels[i] ? 1 : 0;
        return InstanceMask::from_bits(img.width, img.height, bits);
    }

private:
    std::string root_;
};

json prompt_to_json(const RefinePrompt& p) {
    switch (p.kind) {
    case PromptKind::Box2d:
        return json{{"type", "box2d"}, {"data", p.box2d}};
    case PromptKind::Mask:
        return json{{"type", "mask"},
                    {"data", {{"rle", p.mask.runs}, {"width", p.mask.width},
                              {"height", p.mask.height}}}};
    case PromptKind::Points: {
        json pts = json::array();
        for (const auto& [u, v] : p.keypoints) pts.push_back({u, v});
        return json{{"type", "points"}, {"data", pts}};
    }
    }
    return {};
}

class ServiceMaskAdapter final : public MaskRefinementAdapter {
public:
    ServiceMaskAdapter(std::string url, int timeout_ms, int retries)
        : base_url_(std::move(url)), timeout_ms_(timeout_ms), retries_(retries) {}

    std::optional<InstanceMask> refine(const std::string&, const std::string&,
                                       const std::string&, const std::string& image_path,
                                       const RefinePrompt& prompt) override {
        json body;
        body["image_path"] = image_path;
        body["prompt"] = prompt_to_json(prompt);
        const std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= retries_; ++attempt) {
            httplib::Client client(base_url_);
            client.set_connection_timeout(0, timeout_ms_ * 1000);
            client.set_read_timeout(0, timeout_ms_ * 1000);
            auto res = client.Post("/refine", payload, "application/json");
            if (!res) {
                last_error = "no response from " + base_url_;
                continue;
            }
            if (res->status != 200) {
                last_error = "refine service returned status " + std::to_string(res->status);
                continue;
            }
            try {
                const json j = json::parse(res->body);
                InstanceMask m;
                m.width = j.at("width").get<int>();
                m.height = j.at("height").get<int>();
                m.runs = j.at("rle").get<std::vector<std::uint32_t>>();
                m.validate();
                return m;
            } catch (const std::exception& e) {
                throw EngineError(std::string("malformed refine response: ") + e.what());
            }
        }
        throw EngineError("refine request failed: " + last_error);
    }

private:
    std::string base_url_;
    int timeout_ms_;
    int retries_;
};

class FileDetectionAdapter final : public DetectionAdapter {
public:
    explicit FileDetectionAdapter(std::string dir) : dir_(std::move(dir)) {}

    std::vector<ViewDetection> detect(const Scene&, const Frame& frame) override {
        const auto path = std::filesystem::path(dir_) / (frame.frame_id + ".detections.json");
        if (!std::filesystem::exists(path)) return {};
        std::ifstream in(path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse_detections_json(text, frame.intrinsics.width, frame.intrinsics.height);
    }

private:
    std::string dir_;
};

class ServiceDetectionAdapter final : public DetectionAdapter {
public:
    ServiceDetectionAdapter(std::string url, int timeout_ms, int retries)
        : base_url_(std::move(url)), timeout_ms_(timeout_ms), retries_(retries) {}

    std::vector<ViewDetection> detect(const Scene& scene, const Frame& frame) override {
        json body;
        body["frame_id"] = frame.frame_id;
        body["image_path"] = scene.resolve_path(frame.image_ref);
        const std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= retries_; ++attempt) {
            httplib::Client client(base_url_);
            client.set_connection_timeout(0, timeout_ms_ * 1000);
            client.set_read_timeout(0, timeout_ms_ * 1000);
            auto res = client.Post("/detect", payload, "application/json");
            if (!res) {
                last_error = "no response from " + base_url_;
                continue;
            }
            if (res->status != 200) {
                last_error = "detect service returned status " + std::to_string(res->status);
                continue;
            }
            return parse_detections_json(res->body, frame.intrinsics.width,
                                         frame.intrinsics.height);
        }
        throw EngineError("detect request failed: " + last_error);
    }

private:
    std::string base_url_;
    int timeout_ms_;
    int retries_;
};

} // namespace

std::unique_ptr<MaskRefinementAdapter> make_file_mask_adapter(const std::string& root) {
    return std::make_unique<FileMaskAdapter>(root);
}

std::unique_ptr<MaskRefinementAdapter> make_service_mask_adapter(const std::string& base_url,
                                                                 int timeout_ms, int retries) {
    return std::make_unique<ServiceMaskAdapter>(base_url, timeout_ms, retries);
}

std::unique_ptr<DetectionAdapter> make_file_detection_adapter(const std::string& dir) {
    return std::make_unique<FileDetectionAdapter>(dir);
}

std::unique_ptr<DetectionAdapter> make_service_detection_adapter(const std::string& base_url,
                                                                 int timeout_ms, int retries) {
    return std::make_unique<ServiceDetectionAdapter>(base_url, timeout_ms, retries);
}

std::vector<ViewDetection> parse_detections_json(const std::string& text, int expect_width,
                                                 int expect_height) {
    std::vector<ViewDetection> out;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw EngineError(std::string("malformed detection payload: ") + e.what());
    }
    for (const auto& dj : j.value("detections", json::array())) {
        ViewDetection d;
        d.tag = dj.at("tag").get<std::string>();
        d.confidence = dj.value("confidence", 1.0);
        if (dj.contains("mask_rle")) {
            d.mask.width = dj.value("width", expect_width);
            d.mask.height = dj.value("height", expect_height);
            d.mask.runs = dj.at("mask_rle").get<std::vector<std::uint32_t>>();
            d.mask.validate();
        } else if (dj.contains("mask_png")) {
            const ImageU8 img = read_png_u8(dj.at("mask_png").get<std::string>());
            std::vector<std::uint8_t> bits(img.pixels.size());
            for (std::size_t i = 0; i < bits.size(); ++i)
                bits[i] = img.pixels[i * img.channels] ? 1 : 0;
            d.mask = InstanceMask::from_bits(img.width, img.height, bits);
        } else {
            throw EngineError("detection entry needs mask_rle or mask_png");
        }
        if (d.mask.width != expect_width || d.mask.height != expect_height)
            throw EngineError("detection mask dimensions do not match the frame");
        out.push_back(std::move(d));
    }
    return out;
}

void apply_mask_refinement(const Scene& scene, const Frame& frame,
                           std::vector<FrameObjectAttributes>& records,
                           MaskRefinementAdapter* adapter, PromptKind prompt_kind) {
    if (!adapter) return;
    const std::string image_path = scene.resolve_path(frame.image_ref);
    for (auto& rec : records) {
        RefinePrompt prompt;
        prompt.kind = prompt_kind;
        switch (prompt_kind) {
        case PromptKind::Box2d:
            prompt.box2d = {rec.box2d.min_u, rec.box2d.min_v, rec.box2d.max_u, rec.box2d.max_v};
            break;
        case PromptKind::Mask:
            prompt.mask = rec.coarse_mask;
            break;
        case PromptKind::Points: {
            // a few well-spread coarse-mask pixels as point prompts
            const auto bits = rec.coarse_mask.to_bits();
            std::vector<std::pair<int, int>> on;
            for (int v = 0; v < rec.coarse_mask.height; ++v)
                for (int u = 0; u < rec.coarse_mask.width; ++u)
                    if (bits[std::size_t(v) * rec.coarse_mask.width + u]) on.emplace_back(u, v);
            std::mt19937_64 rng(derive_seed(0, {scene.scene_id, frame.frame_id, rec.object_id,
                                                "points"}));
            prompt.keypoints = reservoir_sample(on, 5, rng);
            break;
        }
        }
        try {
            auto refined = adapter->refine(scene.scene_id, frame.frame_id, rec.object_id,
                                           image_path, prompt);
            if (!refined) continue;
            if (refined->width != frame.intrinsics.width ||
                refined->height != frame.intrinsics.height)
                throw EngineError("refined mask dimensions do not match the frame");
            rec.refined_mask = std::move(*refined);
        } catch (const std::exception&) {
            rec.refinement_failed = true; // coarse mask stays in use downstream
        }
    }
}

} // namespace spatialforge
