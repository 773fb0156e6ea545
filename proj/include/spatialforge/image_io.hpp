#pragma once

#include "spatialforge/scene.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spatialforge {

/// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t* at(int u, int v) { return pixels.data() + (std::size_t(v) * width + u) * channels; }
    const std::uint8_t* at(int u, int v) const {
        return pixels.data() + (std::size_t(v) * width + u) * channels;
    }
};

ImageU8 read_png_u8(const std::string& path);      // gray or RGB, 16-bit downshifted
void write_png_u8(const std::string& path, const ImageU8& img);

std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& width, int& height);
void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& data,
                      int width, int height);

DepthMap load_depth(const std::string& path, DepthFormat format, int expect_width,
                    int expect_height);
void save_depth(const std::string& path, DepthFormat format, const DepthMap& depth);

} // namespace spatialforge
