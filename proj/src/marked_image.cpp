#include "spatialforge/marked_image.hpp"

#include "spatialforge/image_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace spatialforge {

namespace {

// 5x7 uppercase glyphs, one byte per row, bit 4 = leftmost column.
const std::uint8_t kFont[26][7] = {
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, // A
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}, // B
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, // C
    {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}, // D
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, // E
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}, // F
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, // G
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, // H
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}, // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}, // L
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, // M
    {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}, // N
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, // O
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}, // P
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, // Q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}, // R
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, // S
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}, // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}, // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}, // W
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}, // X
    {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}, // Y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}, // Z
};

const std::uint8_t kColors[8][3] = {{255, 64, 64},  {64, 160, 255}, {80, 220, 100},
                                    {255, 210, 60}, {200, 110, 255}, {70, 230, 210},
                                    {255, 140, 200}, {235, 235, 235}};

const std::uint8_t* color_for(const std::string& label) {
    const char c = label.empty() ? 'A' : label[0];
    return kColors[std::size_t(c - 'A') % 8];
}

void put_pixel(ImageU8& img, int u, int v, const std::uint8_t* rgb) {
    if (u < 0 || v < 0 || u >= img.width || v >= img.height) return;
    std::uint8_t* px = img.at(u, v);
    px[0] = rgb[0];
    px[1] = rgb[1];
    px[2] = rgb[2];
}

void draw_rect(ImageU8& img, const ProjectedBox2d& box, int thickness,
               const std::uint8_t* rgb) {
    const int u0 = int(std::lround(box.min_u));
    const int v0 = int(std::lround(box.min_v));
    const int u1 = int(std::lround(box.max_u));
    const int v1 = int(std::lround(box.max_v));
    for (int t = 0; t < thickness; ++t) {
        for (int u = u0 - t; u <= u1 + t; ++u) {
            put_pixel(img, u, v0 - t, rgb);
            put_pixel(img, u, v1 + t, rgb);
        }
        for (int v = v0 - t; v <= v1 + t; ++v) {
            put_pixel(img, u0 - t, v, rgb);
            put_pixel(img, u1 + t, v, rgb);
        }
    }
}

void draw_label(ImageU8& img, int u0, int v0, char c, int scale, const std::uint8_t* rgb) {
    if (c < 'A' || c > 'Z') return;
    const std::uint8_t* glyph = kFont[c - 'A'];
    static const std::uint8_t black[3] = {0, 0, 0};
    // filled backing square so the glyph stays readable on any background
    for (int v = -scale; v < 8 * scale; ++v)
        for (int u = -scale; u < 6 * scale; ++u) put_pixel(img, u0 + u, v0 + v, black);
    for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
            if (glyph[row] & (0x10 >> col))
                for (int dv = 0; dv < scale; ++dv)
                    for (int du = 0; du < scale; ++du)
                        put_pixel(img, u0 + col * scale + du, v0 + row * scale + dv, rgb);
}

} // namespace

void render_marked_image(const std::string& image_path, const std::string& out_path,
                         const std::vector<MarkedAnchor>& anchors, const MarkStyle& style) {
    if (anchors.empty()) {
        std::ifstream in(image_path, std::ios::binary);
        if (!in) throw EngineError("cannot open image: " + image_path);
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw EngineError("cannot write image: " + out_path);
        out << in.rdbuf();
        return;
    }
    std::set<std::string> labels;
    for (const auto& a : anchors)
        if (!labels.insert(a.marker_label).second)
            throw InputError("duplicate marker label '" + a.marker_label + "'");

    ImageU8 img = read_png_u8(image_path);
    if (img.channels == 1) { // promote grayscale to RGB for colored overlays
        ImageU8 rgb;
        rgb.width = img.width;
        rgb.height = img.height;
        rgb.channels = 3;
        rgb.pixels.resize(std::size_t(img.width) * img.height * 3);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            rgb.pixels[3 * i] = rgb.pixels[3 * i + 1] = rgb.pixels[3 * i + 2] = img.pixels[i];
        img = std::move(rgb);
    }

    for (const auto& anchor : anchors) {
        const std::uint8_t* rgb = color_for(anchor.marker_label);
        draw_rect(img, anchor.box2d, style.box_thickness, rgb);
        if (anchor.mask && anchor.mask->width == img.width && anchor.mask->height == img.height) {
            const auto edge = mask_contour(*anchor.mask);
            for (int v = 0; v < img.height; ++v)
                for (int u = 0; u < img.width; ++u)
                    if (edge[std::size_t(v) * img.width + u]) put_pixel(img, u, v, rgb);
        }
        draw_label(img, int(std::lround(anchor.box2d.min_u)) + 2 * style.box_thickness + 1,
                   int(std::lround(anchor.box2d.min_v)) + 2 * style.box_thickness + 1,
                   anchor.marker_label.empty() ? 'A' : anchor.marker_label[0],
                   style.label_scale, rgb);
    }
    write_png_u8(out_path, img);
}

std::vector<std::string> render_record_marks(const Scene& scene, const ObjectFrameIndex& index,
                                             const QaRecord& record, const std::string& out_dir,
                                             const MarkStyle& style) {
    std::map<std::string, std::vector<MarkedAnchor>> by_frame;
    for (const auto& a : record.anchors) {
        const FrameObjectAttributes* attrs = index.find(a.object_id, a.frame_id);
        if (!attrs || !attrs->visible)
            throw EngineError("anchor '" + a.object_id + "' is not visible in frame '" +
                              a.frame_id + "'");
        by_frame[a.frame_id].push_back({a.marker_label, attrs->box2d, &attrs->best_mask()});
    }
    std::vector<std::string> written;
    std::filesystem::create_directories(out_dir);
    for (const auto& [frame_id, anchors] : by_frame) {
        const Frame* frame = scene.find_frame(frame_id);
        if (!frame) throw EngineError("unknown frame '" + frame_id + "'");
        const std::string out_path =
            (std::filesystem::path(out_dir) / (record.record_id + "_" + frame_id + ".png"))
                .string();
        render_marked_image(scene.resolve_path(frame->image_ref), out_path, anchors, style);
        written.push_back(out_path);
    }
    return written;
}

} // namespace spatialforge
