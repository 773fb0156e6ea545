#include "spatialforge/hull.hpp"

#include <algorithm>
#include <cmath>

namespace spatialforge {

namespace {

double cross2(const Vec2d& o, const Vec2d& a, const Vec2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

} // namespace

std::vector<Vec2d> convex_hull(std::vector<Vec2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2d& a, const Vec2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2d& a, const Vec2d& b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Vec2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) { // lower chain
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i > 0; --i) { // upper chain
        while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

bool point_in_convex_polygon(const std::vector<Vec2d>& hull, const Vec2d& p, double eps) {
    if (hull.size() < 3) return false;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2d& a = hull[i];
        const Vec2d& b = hull[(i + 1) % hull.size()];
        if (cross2(a, b, p) < -eps) return false; // hull is CCW
    }
    return true;
}

MinAreaRect min_area_rect(const std::vector<Vec2d>& hull) {
    if (hull.size() < 3) throw EngineError("min_area_rect: degenerate hull");

    MinAreaRect best;
    best.area = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2d edge = hull[(i + 1) % hull.size()] - hull[i];
        const double len = edge.norm();
        if (len < 1e-15) continue;
        const Vec2d u = edge / len;
        const Vec2d v(-u.y(), u.x());
        double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
        for (const auto& p : hull) {
            const double pu = p.dot(u);
            const double pv = p.dot(v);
            min_u = std::min(min_u, pu);
            max_u = std::max(max_u, pu);
            min_v = std::min(min_v, pv);
            max_v = std::max(max_v, pv);
        }
        const double du = max_u - min_u, dv = max_v - min_v;
        const double area = du * dv;
        if (area < best.area) {
            best.area = area;
            const double cu = 0.5 * (min_u + max_u), cv = 0.5 * (min_v + max_v);
            best.center = cu * u + cv * v;
            double angle = std::atan2(u.y(), u.x());
            double length = du, width = dv;
            if (length < width) { // canonical form: long side defines the angle
                std::swap(length, width);
                angle += M_PI_2;
            }
            while (angle >= M_PI_2) angle -= M_PI;
            while (angle < -M_PI_2) angle += M_PI;
            best.angle = angle;
            best.length = length;
            best.width = width;
        }
    }
    if (!std::isfinite(best.area)) throw EngineError("min_area_rect: degenerate hull");
    return best;
}

} // namespace spatialforge
