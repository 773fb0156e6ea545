#include "spatialforge/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace spatialforge {

namespace {

struct PngReader {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    explicit PngReader(const std::string& path) {
        fp = std::fopen(path.c_str(), "rb");
        if (!fp) throw EngineError("cannot open image: " + path);
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (!png || !info) throw EngineError("libpng init failed");
    }
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriter {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    explicit PngWriter(const std::string& path) {
        fp = std::fopen(path.c_str(), "wb");
        if (!fp) throw EngineError("cannot write image: " + path);
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (!png || !info) throw EngineError("libpng init failed");
    }
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, &info);
        if (fp) std::fclose(fp);
    }
};

} // namespace

ImageU8 read_png_u8(const std::string& path) {
    PngReader r(path);
    if (setjmp(png_jmpbuf(r.png))) throw EngineError("corrupt PNG: " + path);
    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);

    png_set_strip_16(r.png);
    png_set_palette_to_rgb(r.png);
    png_set_expand_gray_1_2_4_to_8(r.png);
    png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    ImageU8 img;
    img.width = int(png_get_image_width(r.png, r.info));
    img.height = int(png_get_image_height(r.png, r.info));
    img.channels = int(png_get_channels(r.png, r.info));
    if (img.channels != 1 && img.channels != 3)
        throw EngineError("unsupported channel count in " + path);
    img.pixels.resize(std::size_t(img.width) * img.height * img.channels);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = img.pixels.data() + std::size_t(y) * img.width * img.channels;
    png_read_image(r.png, rows.data());
    return img;
}

void write_png_u8(const std::string& path, const ImageU8& img) {
    PngWriter w(path);
    if (setjmp(png_jmpbuf(w.png))) throw EngineError("PNG write failed: " + path);
    png_init_io(w.png, w.fp);
    const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(w.png, w.info, img.width, img.height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(w.png, 1);
    png_write_info(w.png, w.info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.pixels.data() +
                                        std::size_t(y) * img.width * img.channels);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& width, int& height) {
    PngReader r(path);
    if (setjmp(png_jmpbuf(r.png))) throw EngineError("corrupt PNG: " + path);
    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);
    width = int(png_get_image_width(r.png, r.info));
    height = int(png_get_image_height(r.png, r.info));
    if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(r.png, r.info) != 16)
        throw EngineError("expected 16-bit grayscale PNG: " + path);
    png_set_swap(r.png); // PNG stores big-endian samples
    png_read_update_info(r.png, r.info);
    std::vector<std::uint16_t> data(std::size_t(width) * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(data.data() + std::size_t(y) * width);
    png_read_image(r.png, rows.data());
    return data;
}

void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& data,
                      int width, int height) {
    PngWriter w(path);
    if (setjmp(png_jmpbuf(w.png))) throw EngineError("PNG write failed: " + path);
    png_init_io(w.png, w.fp);
    png_set_IHDR(w.png, w.info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(w.png, 1);
    png_write_info(w.png, w.info);
    png_set_swap(w.png);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<std::uint16_t*>(data.data() + std::size_t(y) * width));
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

DepthMap load_depth(const std::string& path, DepthFormat format, int expect_width,
                    int expect_height) {
    DepthMap d;
    if (format == DepthFormat::Png16Millimeters) {
        const auto mm = read_png_gray16(path, d.width, d.height);
        d.values.resize(mm.size());
        for (std::size_t i = 0; i < mm.size(); ++i) d.values[i] = float(mm[i]) * 1e-3f;
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw EngineError("cannot open depth file: " + path);
        std::int32_t wh[2];
        in.read(reinterpret_cast<char*>(wh), sizeof(wh));
        d.width = wh[0];
        d.height = wh[1];
        if (d.width <= 0 || d.height <= 0 || d.width > 1 << 16 || d.height > 1 << 16)
            throw EngineError("corrupt raw depth header: " + path);
        d.values.resize(std::size_t(d.width) * d.height);
        in.read(reinterpret_cast<char*>(d.values.data()),
                std::streamsize(d.values.size() * sizeof(float)));
        if (!in) throw EngineError("truncated raw depth file: " + path);
    }
    if (d.width != expect_width || d.height != expect_height)
        throw InputError("depth map " + path + " is " + std::to_string(d.width) + "x" +
                         std::to_string(d.height) + ", expected " + std::to_string(expect_width) +
                         "x" + std::to_string(expect_height));
    return d;
}

void save_depth(const std::string& path, DepthFormat format, const DepthMap& depth) {
    if (format == DepthFormat::Png16Millimeters) {
        std::vector<std::uint16_t> mm(depth.values.size());
        for (std::size_t i = 0; i < mm.size(); ++i) {
            const float v = depth.values[i] * 1000.0f;
            mm[i] = v <= 0.f ? 0 : (v >= 65535.f ? 65535 : std::uint16_t(v + 0.5f));
        }
        write_png_gray16(path, mm, depth.width, depth.height);
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw EngineError("cannot write depth file: " + path);
        const std::int32_t wh[2] = {depth.width, depth.height};
        out.write(reinterpret_cast<const char*>(wh), sizeof(wh));
        out.write(reinterpret_cast<const char*>(depth.values.data()),
                  std::streamsize(depth.values.size() * sizeof(float)));
    }
}

} // namespace spatialforge
