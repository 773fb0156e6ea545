#pragma once

#include "spatialforge/types.hpp"

#include <cstdint>
#include <vector>

namespace spatialforge {

/// Binary instance mask stored as run-length counts over the row-major pixel
/// grid. Runs alternate off/on and start with an off run (possibly 0), so the
/// encoding is a bijection: run lengths always sum to width*height.
struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> runs;

    static InstanceMask from_bits(int width, int height, const std::vector<std::uint8_t>& bits);
    std::vector<std::uint8_t> to_bits() const;

    std::size_t count_on() const;
    bool empty_mask() const { return count_on() == 0; }
    void validate() const; // throws InputError when runs do not sum to width*height

    bool operator==(const InstanceMask&) const = default;
};

/// Pixels of the mask that touch an off pixel (4-neighborhood) or the image
/// border; used for drawing contours on marked images.
std::vector<std::uint8_t> mask_contour(const InstanceMask& mask);

} // namespace spatialforge
