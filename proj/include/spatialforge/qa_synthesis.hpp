#pragma once

#include "spatialforge/qa_records.hpp"
#include "spatialforge/scene_graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace spatialforge {

struct QaConfig {
    std::uint64_t seed = 0;
    RelationMargins margins;
    double tie_ratio = 1.02; // size comparisons within 2% are "comparable"

    // view pair sampling
    int k_min_shared = 1;
    double min_yaw_delta_deg = 15.0;
    int max_pairs = 64;

    int round_decimals = 2;
    bool sm_multiple_choice = true;

    // camera perception gates
    double bearing_margin_px = 20.0;   // half-width of the "center" band
    double bearing_skip_band_px = 5.0; // skip records this close to a class edge
    double near_max = 1.5;             // distance-class boundaries, scene units
    double mid_max = 3.0;
    double class_skip_band = 0.15;
    double rotation_none_max_deg = 5.0;
    double rotation_skip_band_deg = 2.0; // skip near the none gate and near 180-degree reversals
    double motion_tie_ratio = 0.95;      // skip when the top two axis magnitudes nearly tie

    // scene-aware reasoning
    double nearest_margin = 0.10;  // runner-up must be this much farther
    double order_margin_px = 10.0; // min pixel gap between ordered objects
    double grid_resolution = 0.1;
    double grid_padding = 1.0;
    int traversability_per_scene = 2;

    std::map<std::string, int> subtask_quota; // per scene; missing key = unlimited

    bool operator==(const QaConfig&) const = default;
};

/// The 19 registered sub-tasks across the five families.
const std::vector<std::pair<std::string, Task>>& subtask_roster();

struct ViewPair {
    std::string frame_a;
    std::string frame_b;
    int shared_count = 0;
    RelativePose pose_delta;
};

/// All frame pairs with >= k shared visible objects and >= min_yaw_delta
/// degrees of viewpoint change, in seeded-shuffle order, truncated to
/// max_pairs. Deterministic for a fixed seed.
std::vector<ViewPair> sample_view_pairs(const Scene& scene, const ObjectFrameIndex& index,
                                        int k, int max_pairs, double min_yaw_delta_deg,
                                        std::uint64_t rng_seed);

std::vector<QaRecord> synthesize_sm(const Scene& scene, const SceneGraph& graph,
                                    const QaConfig& config);
std::vector<QaRecord> synthesize_sr(const Scene& scene, const SceneGraph& graph,
                                    const QaConfig& config);
std::vector<QaRecord> synthesize_cp_single(const Scene& scene, const Frame& frame,
                                           const SceneGraph& graph, const QaConfig& config);
std::vector<QaRecord> synthesize_cp_pair(const Scene& scene, const ViewPair& pair,
                                         const QaConfig& config);
std::vector<QaRecord> synthesize_mc(const Scene& scene, const ViewPair& pair,
                                    const MultiViewGraph& mv, const QaConfig& config);
std::vector<QaRecord> synthesize_sar(const Scene& scene, const ObjectFrameIndex& index,
                                     const std::map<std::string, SceneGraph>& graphs,
                                     const QaConfig& config);

/// XY occupancy grid over the scene's box footprints; the traversability
/// substrate. Origin snaps to the resolution lattice so cell centers round
/// exactly to two decimals.
struct OccupancyGrid {
    double x0 = 0, y0 = 0;
    double resolution = 0.1;
    int nx = 0, ny = 0;
    std::vector<std::uint8_t> blocked;

    bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx && iy < ny; }
    bool is_blocked(int ix, int iy) const { return blocked[std::size_t(iy) * nx + ix] != 0; }
    Vec2d cell_center(int ix, int iy) const {
        return {x0 + (ix + 0.5) * resolution, y0 + (iy + 0.5) * resolution};
    }
    std::pair<int, int> cell_of(const Vec2d& p) const {
        return {int(std::floor((p.x() - x0) / resolution)),
                int(std::floor((p.y() - y0) / resolution))};
    }
};

OccupancyGrid build_occupancy_grid(const Scene& scene, double resolution, double padding,
                                   const Vec2d* include_a = nullptr,
                                   const Vec2d* include_b = nullptr);

/// 4-neighbor flood fill connectivity between two free cells.
bool grid_path_exists(const OccupancyGrid& grid, std::pair<int, int> from,
                      std::pair<int, int> to);

/// Whole-scene driver: builds graphs and pairs, runs every family, applies
/// per-subtask quotas, returns records sorted by record_id.
std::vector<QaRecord> generate_scene_qa(const Scene& scene, const ObjectFrameIndex& index,
                                        const QaConfig& config);

/// Quota + canonical ordering applied to a candidate pool (exposed for the
/// pipeline sink, which merges candidates from parallel workers).
std::vector<QaRecord> apply_quotas_and_sort(std::vector<QaRecord> records,
                                            const QaConfig& config);

std::string format_meters(double value, int decimals);

} // namespace spatialforge
