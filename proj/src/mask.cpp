#include "spatialforge/mask.hpp"

#include <numeric>

namespace spatialforge {

InstanceMask InstanceMask::from_bits(int width, int height,
                                     const std::vector<std::uint8_t>& bits) {
    InstanceMask m;
    m.width = width;
    m.height = height;
    const std::size_t n = std::size_t(width) * std::size_t(height);
    if (bits.size() != n) throw InputError("mask bit buffer size mismatch");
    std::uint8_t current = 0; // encoding starts with an off run
    std::uint32_t run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t b = bits[i] ? 1 : 0;
        if (b == current) {
            ++run;
        } else {
            m.runs.push_back(run);
            current = b;
            run = 1;
        }
    }
    m.runs.push_back(run);
    return m;
}

std::vector<std::uint8_t> InstanceMask::to_bits() const {
    validate();
    std::vector<std::uint8_t> bits(std::size_t(width) * std::size_t(height), 0);
    std::size_t pos = 0;
    std::uint8_t current = 0;
    for (const std::uint32_t run : runs) {
        if (current)
            std::fill(bits.begin() + pos, bits.begin() + pos + run, std::uint8_t(1));
        pos += run;
        current = !current;
    }
    return bits;
}

std::size_t InstanceMask::count_on() const {
    std::size_t on = 0;
    for (std::size_t i = 1; i < runs.size(); i += 2) on += runs[i];
    return on;
}

void InstanceMask::validate() const {
    const std::uint64_t total =
        std::accumulate(runs.begin(), runs.end(), std::uint64_t(0));
    if (total != std::uint64_t(width) * std::uint64_t(height))
        throw InputError("mask runs sum to " + std::to_string(total) + ", expected " +
                         std::to_string(std::uint64_t(width) * std::uint64_t(height)));
}

std::vector<std::uint8_t> mask_contour(const InstanceMask& mask) {
    const auto bits = mask.to_bits();
    const int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> edge(bits.size(), 0);
    auto at = [&](int x, int y) -> std::uint8_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return bits[std::size_t(y) * w + x];
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (at(x, y) && (!at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1)))
                edge[std::size_t(y) * w + x] = 1;
    return edge;
}

} // namespace spatialforge
