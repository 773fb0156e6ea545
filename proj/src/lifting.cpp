#include "spatialforge/lifting.hpp"

#include "spatialforge/hull.hpp"
#include "spatialforge/image_io.hpp"
#include "spatialforge/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace spatialforge {

std::vector<Vec3d> backproject_detection(const Frame& frame, const DepthMap& depth,
                                         const ViewDetection& det, int stride,
                                         double max_depth) {
    if (det.mask.width != frame.intrinsics.width || det.mask.height != frame.intrinsics.height)
        throw EngineError("detection mask dimensions do not match the frame");
    const auto bits = det.mask.to_bits();
    const auto& k = frame.intrinsics;
    std::vector<Vec3d> cloud;
    for (int v = 0; v < k.height; v += stride) {
        for (int u = 0; u < k.width; u += stride) {
            if (!bits[std::size_t(v) * k.width + u]) continue;
            if (!depth.valid(u, v, max_depth)) continue;
            const double z = depth.at(u, v);
            const Vec3d p_cam((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z);
            cloud.push_back(frame.pose.rotation * p_cam + frame.pose.translation);
        }
    }
    return cloud;
}

namespace {

// Exact k-NN mean distances via a uniform grid: the search radius doubles
// until at least k neighbors fall inside, which bounds the true k-th distance.
std::vector<double> mean_knn_distances(const std::vector<Vec3d>& pts, int k) {
    const std::size_t n = pts.size();
    std::vector<double> mean_d(n, 0.0);
    Vec3d lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag = (hi - lo).norm();
    const double cell = std::max(diag / std::max(1.0, std::cbrt(double(n))), 1e-9);

    auto key = [&](const Vec3d& p) {
        const auto ix = std::int64_t(std::floor((p.x() - lo.x()) / cell));
        const auto iy = std::int64_t(std::floor((p.y() - lo.y()) / cell));
        const auto iz = std::int64_t(std::floor((p.z() - lo.z()) / cell));
        return (ix * 73856093) ^ (iy * 19349663) ^ (iz * 83492791);
    };
    std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < n; ++i) grid[key(pts[i])].push_back(i);

    std::vector<double> dists;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = cell;
        while (true) {
            dists.clear();
            const int reach = int(std::ceil(radius / cell));
            const Vec3d& p = pts[i];
            const auto cx = std::int64_t(std::floor((p.x() - lo.x()) / cell));
            const auto cy = std::int64_t(std::floor((p.y() - lo.y()) / cell));
            const auto cz = std::int64_t(std::floor((p.z() - lo.z()) / cell));
            for (int dx = -reach; dx <= reach; ++dx)
                for (int dy = -reach; dy <= reach; ++dy)
                    for (int dz = -reach; dz <= reach; ++dz) {
                        const std::int64_t kk = ((cx + dx) * 73856093) ^ ((cy + dy) * 19349663) ^
                                                ((cz + dz) * 83492791);
                        auto it = grid.find(kk);
                        if (it == grid.end()) continue;
                        for (const std::size_t j : it->second) {
                            if (j == i) continue;
                            const double d = (pts[j] - p).norm();
                            if (d <= radius) dists.push_back(d);
                        }
                    }
            if (int(dists.size()) >= k || radius > 2.0 * diag + cell) break;
            radius *= 2.0;
        }
        const int take = std::min<int>(k, int(dists.size()));
        if (take == 0) {
            mean_d[i] = 0.0;
            continue;
        }
        std::nth_element(dists.begin(), dists.begin() + (take - 1), dists.end());
        mean_d[i] = std::accumulate(dists.begin(), dists.begin() + take, 0.0) / take;
    }
    return mean_d;
}

} // namespace

std::vector<Vec3d> remove_outliers(const std::vector<Vec3d>& cloud, int k, double sigma) {
    if (cloud.size() <= std::size_t(k) + 1) return cloud;
    const auto mean_d = mean_knn_distances(cloud, k);
    const double mu = std::accumulate(mean_d.begin(), mean_d.end(), 0.0) / mean_d.size();
    double var = 0.0;
    for (const double d : mean_d) var += (d - mu) * (d - mu);
    const double sd = std::sqrt(var / mean_d.size());
    const double cutoff = mu + sigma * sd;
    std::vector<Vec3d> out;
    out.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (mean_d[i] <= cutoff) out.push_back(cloud[i]);
    return out;
}

double aabb_iou(const Vec3d& lo_a, const Vec3d& hi_a, const Vec3d& lo_b, const Vec3d& hi_b) {
    double inter = 1.0;
    for (int i = 0; i < 3; ++i) {
        const double lo = std::max(lo_a[i], lo_b[i]);
        const double hi = std::min(hi_a[i], hi_b[i]);
        if (hi <= lo) return 0.0;
        inter *= hi - lo;
    }
    const double va = (hi_a - lo_a).prod();
    const double vb = (hi_b - lo_b).prod();
    return inter / (va + vb - inter);
}

std::vector<std::vector<std::size_t>> associate_instances(
    const std::vector<DetectionCloud>& clouds, double iou_threshold) {
    std::vector<std::size_t> order(clouds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (clouds[a].frame_id != clouds[b].frame_id)
            return clouds[a].frame_id < clouds[b].frame_id;
        return clouds[a].detection_index < clouds[b].detection_index;
    });

    struct Bounds {
        Vec3d lo, hi;
    };
    std::vector<Bounds> bounds(clouds.size());
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        Vec3d lo = clouds[i].points.front(), hi = lo;
        for (const auto& p : clouds[i].points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        bounds[i] = {lo, hi};
    }

    auto linked = [&](std::size_t a, std::size_t b) {
        return clouds[a].tag == clouds[b].tag &&
               aabb_iou(bounds[a].lo, bounds[a].hi, bounds[b].lo, bounds[b].hi) >= iou_threshold;
    };

    std::vector<std::vector<std::size_t>> groups;
    for (const std::size_t idx : order) groups.push_back({idx});
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < groups.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < groups.size() && !merged; ++j) {
                bool link = false;
                for (const std::size_t a : groups[i]) {
                    for (const std::size_t b : groups[j])
                        if (linked(a, b)) {
                            link = true;
                            break;
                        }
                    if (link) break;
                }
                if (link) {
                    groups[i].insert(groups[i].end(), groups[j].begin(), groups[j].end());
                    groups.erase(groups.begin() + j);
                    merged = true;
                }
            }
        }
    }
    return groups;
}

ObbBox fit_obb(const std::vector<Vec3d>& cloud) {
    if (cloud.size() < 4) throw EngineError("fit_obb: need at least 4 points");
    std::vector<Vec2d> xy;
    xy.reserve(cloud.size());
    double z_min = cloud[0].z(), z_max = cloud[0].z();
    for (const auto& p : cloud) {
        xy.emplace_back(p.x(), p.y());
        z_min = std::min(z_min, p.z());
        z_max = std::max(z_max, p.z());
    }
    const auto hull = convex_hull(std::move(xy));
    if (hull.size() < 3) throw EngineError("fit_obb: degenerate (collinear) cloud");
    const MinAreaRect rect = min_area_rect(hull);

    ObbBox box;
    box.center = Vec3d(rect.center.x(), rect.center.y(), 0.5 * (z_min + z_max));
    box.extents = Vec3d(std::max(rect.length, 1e-6), std::max(rect.width, 1e-6),
                        std::max(z_max - z_min, 1e-6));
    box.rpy = Vec3d(0.0, 0.0, rect.angle);
    return box;
}

LiftResult lift_scene(const Scene& scene, DetectionAdapter& adapter, const LiftConfig& config) {
    std::vector<DetectionCloud> clouds;
    for (const auto& frame : scene.frames) {
        const DepthMap depth = load_depth(scene.resolve_path(frame.depth_ref), frame.depth_format,
                                          frame.intrinsics.width, frame.intrinsics.height);
        const auto detections = adapter.detect(scene, frame);
        for (std::size_t d = 0; d < detections.size(); ++d) {
            auto points = backproject_detection(frame, depth, detections[d], config.stride,
                                                config.max_depth);
            std::mt19937_64 rng(derive_seed(config.global_seed,
                                            {scene.scene_id, frame.frame_id, std::to_string(d)}));
            points = reservoir_sample(points, config.max_points_per_detection, rng);
            points = remove_outliers(points, config.knn_k, config.knn_sigma);
            if (points.empty()) continue;
            clouds.push_back({frame.frame_id, int(d), detections[d].tag, std::move(points)});
        }
    }

    LiftResult result;
    result.scene = scene;
    result.scene.boxes.clear();
    result.scene.source_tag = "lifted";
    if (clouds.empty()) return result;

    const auto groups = associate_instances(clouds, config.iou_threshold);
    std::map<std::string, int> tag_counters;
    for (const auto& group : groups) {
        LiftedInstance inst;
        std::size_t total = 0;
        std::map<std::string, int> votes;
        for (const std::size_t idx : group) {
            const auto& c = clouds[idx];
            inst.members.emplace_back(c.frame_id, c.detection_index);
            inst.merged_cloud.insert(inst.merged_cloud.end(), c.points.begin(), c.points.end());
            ++votes[c.tag];
            total += c.points.size();
        }
        if (total < config.min_points) continue;
        int best = 0;
        for (const auto& [tag, n] : votes)
            if (n > best || (n == best && (inst.tag.empty() || tag < inst.tag))) {
                best = n;
                inst.tag = tag;
            }
        inst.fitted_box = fit_obb(inst.merged_cloud);
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "_%03d", tag_counters[inst.tag]++);
        inst.instance_id = inst.tag + suffix;
        inst.fitted_box.id = inst.instance_id;
        inst.fitted_box.tag = inst.tag;
        inst.fitted_box.metric = scene.depth_metric;
        result.scene.boxes.push_back(inst.fitted_box);
        result.instances.push_back(std::move(inst));
    }
    result.scene.validate();
    return result;
}

namespace {

// Sutherland-Hodgman clip of a convex polygon by the half-plane left of a->b.
std::vector<Vec2d> clip_halfplane(const std::vector<Vec2d>& poly, const Vec2d& a, const Vec2d& b) {
    std::vector<Vec2d> out;
    const auto side = [&](const Vec2d& p) {
        return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2d& cur = poly[i];
        const Vec2d& nxt = poly[(i + 1) % poly.size()];
        const double sc = side(cur), sn = side(nxt);
        if (sc >= 0) out.push_back(cur);
        if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
            const double t = sc / (sc - sn);
            out.push_back(cur + t * (nxt - cur));
        }
    }
    return out;
}

double polygon_area(const std::vector<Vec2d>& poly) {
    double area = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2d& a = poly[i];
        const Vec2d& b = poly[(i + 1) % poly.size()];
        area += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * std::abs(area);
}

std::vector<Vec2d> footprint_ccw(const ObbBox& b) {
    const double c = std::cos(b.rpy.z()), s = std::sin(b.rpy.z());
    const double hx = 0.5 * b.extents.x(), hy = 0.5 * b.extents.y();
    std::vector<Vec2d> poly;
    for (const auto& [sx, sy] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}})
        poly.emplace_back(b.center.x() + c * sx * hx - s * sy * hy,
                          b.center.y() + s * sx * hx + c * sy * hy);
    return poly;
}

} // namespace

double obb_iou_gravity_aligned(const ObbBox& a, const ObbBox& b) {
    const double z_lo = std::max(a.center.z() - 0.5 * a.extents.z(),
                                 b.center.z() - 0.5 * b.extents.z());
    const double z_hi = std::min(a.center.z() + 0.5 * a.extents.z(),
                                 b.center.z() + 0.5 * b.extents.z());
    if (z_hi <= z_lo) return 0.0;

    std::vector<Vec2d> poly = footprint_ccw(a);
    const auto clip = footprint_ccw(b);
    for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i)
        poly = clip_halfplane(poly, clip[i], clip[(i + 1) % clip.size()]);
    if (poly.size() < 3) return 0.0;

    const double inter = polygon_area(poly) * (z_hi - z_lo);
    const double va = a.volume(), vb = b.volume();
    return inter / (va + vb - inter);
}

} // namespace spatialforge
