#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "lczgrid/errors.hpp"

namespace lczgrid {

// Georeferencing of a north-up raster with square cells. origin_x/origin_y
// are the map coordinates of the *top-left corner* of cell (0,0); rows grow
// southward. crs_id is an opaque pass-through identifier; no reprojection
// happens anywhere in this library.
struct GeoRef {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;  // meters per pixel, square cells only
    std::string crs_id;
};

inline bool same_georef(const GeoRef& a, const GeoRef& b, double tol = 1e-9) {
    return a.crs_id == b.crs_id && std::abs(a.cell_size - b.cell_size) <= tol &&
           std::abs(a.origin_x - b.origin_x) <= tol && std::abs(a.origin_y - b.origin_y) <= tol;
}

// Mapping between a fine parameter raster and the coarse LCZ grid. Tile
// (i, j) covers fine pixels [offset_x + j*factor, offset_x + (j+1)*factor)
// in x and [offset_y + i*factor, offset_y + (i+1)*factor) in y.
struct TilingPlan {
    int tiles_x = 0;
    int tiles_y = 0;
    int factor = 1;  // coarse cell size / fine cell size, integer
    int offset_x = 0;
    int offset_y = 0;

    std::int64_t tile_count() const { return std::int64_t(tiles_x) * tiles_y; }
    bool in_bounds(int i, int j) const { return i >= 0 && i < tiles_y && j >= 0 && j < tiles_x; }
};

// Builds the tiling between a fine grid and a coarse grid. Preconditions
// (each violation raises AlignmentError with its own message):
//   - identical crs_id,
//   - coarse cell size an integer multiple of the fine cell size,
//   - origins coincident within half a fine cell (no resampling is ever
//     performed; misaligned inputs must be preprocessed),
//   - the fine raster covers every coarse cell.
inline TilingPlan plan_tiling(const GeoRef& fine, int fine_w, int fine_h,
                              const GeoRef& coarse, int coarse_w, int coarse_h) {
    if (fine_w <= 0 || fine_h <= 0 || coarse_w <= 0 || coarse_h <= 0)
        throw AlignmentError("plan_tiling: empty raster");
    if (fine.crs_id != coarse.crs_id)
        throw AlignmentError("plan_tiling: CRS mismatch ('" + fine.crs_id + "' vs '" +
                             coarse.crs_id + "')");
    const double ratio = coarse.cell_size / fine.cell_size;
    const double factor_r = std::round(ratio);
    if (factor_r < 1.0 || std::abs(ratio - factor_r) > 1e-6 * factor_r)
        throw AlignmentError("plan_tiling: coarse cell size " + std::to_string(coarse.cell_size) +
                             " is not an integer multiple of fine cell size " +
                             std::to_string(fine.cell_size));
    const int factor = static_cast<int>(factor_r);

    const double dx_cells = (coarse.origin_x - fine.origin_x) / fine.cell_size;
    const double dy_cells = (fine.origin_y - coarse.origin_y) / fine.cell_size;
    if (std::abs(dx_cells) > 0.5 + 1e-9 || std::abs(dy_cells) > 0.5 + 1e-9)
        throw AlignmentError("plan_tiling: origin misalignment exceeds half a fine cell");

    TilingPlan plan;
    plan.tiles_x = coarse_w;
    plan.tiles_y = coarse_h;
    plan.factor = factor;
    plan.offset_x = static_cast<int>(std::round(dx_cells));  // 0 under the precondition
    plan.offset_y = static_cast<int>(std::round(dy_cells));
    if (plan.offset_x + std::int64_t(coarse_w) * factor > fine_w ||
        plan.offset_y + std::int64_t(coarse_h) * factor > fine_h)
        throw AlignmentError("plan_tiling: fine raster does not cover the coarse grid extent");
    return plan;
}

// Map coordinates of the center of coarse cell (i, j) under `plan`.
inline void tile_center(const GeoRef& fine, const TilingPlan& plan, int i, int j, double& x,
                        double& y) {
    x = fine.origin_x + (plan.offset_x + (j + 0.5) * plan.factor) * fine.cell_size;
    y = fine.origin_y - (plan.offset_y + (i + 0.5) * plan.factor) * fine.cell_size;
}

}  // namespace lczgrid
