#pragma once

#include "spatialforge/types.hpp"

#include <vector>

namespace spatialforge {

/// Convex hull of 2D points (Andrew monotone chain), counterclockwise,
/// without collinear points. Fewer than 3 distinct non-collinear inputs give
/// a degenerate hull (size < 3).
std::vector<Vec2d> convex_hull(std::vector<Vec2d> points);

bool point_in_convex_polygon(const std::vector<Vec2d>& hull_ccw, const Vec2d& p,
                             double eps = 1e-12);

/// Minimum-area enclosing rectangle of a convex hull via rotating calipers
/// (the optimum has a side collinear with some hull edge).
struct MinAreaRect {
    Vec2d center = Vec2d::Zero();
    double angle = 0.0;  // orientation of the long side, in [-pi/2, pi/2)
    double length = 0.0; // extent along `angle` (>= width)
    double width = 0.0;
    double area = 0.0;
};

MinAreaRect min_area_rect(const std::vector<Vec2d>& hull_ccw);

} // namespace spatialforge
