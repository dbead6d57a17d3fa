#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>

#include "lczgrid/errors.hpp"
#include "lczgrid/georef.hpp"

namespace lczgrid {

// Dense row-major grid with georeferencing and nodata semantics. Rasters are
// immutable once loaded/built; tile windows over them are read-only and safe
// to consume from many workers at once.
template <class T>
struct Raster {
    using Array = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Array cells;  // height rows x width cols
    GeoRef georef;
    T nodata{};

    int width() const { return static_cast<int>(cells.cols()); }
    int height() const { return static_cast<int>(cells.rows()); }
    std::int64_t size() const { return cells.size(); }

    T operator()(int row, int col) const { return cells(row, col); }
    T& at(int row, int col) { return cells(row, col); }

    bool is_valid(T v) const {
        if constexpr (std::is_floating_point_v<T>) {
            if (std::isnan(static_cast<double>(nodata))) return !std::isnan(static_cast<double>(v));
        }
        return v != nodata;
    }
    bool valid_at(int row, int col) const { return is_valid(cells(row, col)); }
};

template <class T>
Raster<T> make_raster(int width, int height, const GeoRef& georef, T nodata) {
    if (width <= 0 || height <= 0)
        throw UserError("make_raster: dimensions must be positive (got " + std::to_string(width) +
                        "x" + std::to_string(height) + ")");
    if (!(georef.cell_size > 0.0)) throw UserError("make_raster: cell_size must be positive");
    Raster<T> r;
    r.georef = georef;
    r.nodata = nodata;
    r.cells = Raster<T>::Array::Constant(height, width, nodata);
    return r;
}

// Read-only factor x factor window of fine cells backing one tile. Holds a
// pointer to the parent raster; the parent must outlive the window.
template <class T>
struct CellWindow {
    const Raster<T>* parent = nullptr;
    int row0 = 0, col0 = 0;
    int rows = 0, cols = 0;

    T operator()(int r, int c) const { return parent->cells(row0 + r, col0 + c); }
    std::int64_t size() const { return std::int64_t(rows) * cols; }
    T nodata() const { return parent->nodata; }
    bool is_valid(T v) const { return parent->is_valid(v); }

    auto block() const { return parent->cells.block(row0, col0, rows, cols); }
};

template <class T>
CellWindow<T> tile_view(const Raster<T>& raster, const TilingPlan& plan, int i, int j) {
    if (!plan.in_bounds(i, j))
        throw UserError("tile_view: tile index (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside plan " + std::to_string(plan.tiles_y) + "x" +
                        std::to_string(plan.tiles_x));
    CellWindow<T> w;
    w.parent = &raster;
    w.row0 = plan.offset_y + i * plan.factor;
    w.col0 = plan.offset_x + j * plan.factor;
    w.rows = plan.factor;
    w.cols = plan.factor;
    if (w.row0 + w.rows > raster.height() || w.col0 + w.cols > raster.width())
        throw UserError("tile_view: tile exceeds raster bounds");
    return w;
}

// Fraction of non-nodata cells in the window, in [0, 1].
template <class T>
double valid_fraction(const CellWindow<T>& w) {
    std::int64_t valid = 0;
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c)
            if (w.is_valid(w(r, c))) ++valid;
    return static_cast<double>(valid) / static_cast<double>(w.size());
}

template <class T, class U>
TilingPlan plan_tiling(const Raster<T>& fine, const Raster<U>& coarse) {
    return plan_tiling(fine.georef, fine.width(), fine.height(), coarse.georef, coarse.width(),
                       coarse.height());
}

// Tiling against an implicit coarse grid of tile_size_m cells anchored at the
// fine origin. Trailing fine pixels that do not fill a whole tile are dropped.
template <class T>
TilingPlan plan_tiling_for_tile_size(const Raster<T>& fine, double tile_size_m) {
    if (!(tile_size_m > 0)) throw UserError("tile size must be positive");
    GeoRef coarse = fine.georef;
    coarse.cell_size = tile_size_m;
    const double ratio = tile_size_m / fine.georef.cell_size;
    const double factor_r = std::round(ratio);
    if (factor_r < 1.0 || std::abs(ratio - factor_r) > 1e-6 * factor_r)
        throw AlignmentError("tile size " + std::to_string(tile_size_m) +
                             " is not an integer multiple of the cell size " +
                             std::to_string(fine.georef.cell_size));
    const int factor = static_cast<int>(factor_r);
    const int tx = fine.width() / factor;
    const int ty = fine.height() / factor;
    if (tx == 0 || ty == 0)
        throw AlignmentError("raster smaller than one tile (" + std::to_string(factor) +
                             " cells)");
    return plan_tiling(fine.georef, fine.width(), fine.height(), coarse, tx, ty);
}

// Georef of the coarse grid described by `plan` over `fine`.
inline GeoRef coarse_georef(const GeoRef& fine, const TilingPlan& plan) {
    GeoRef g = fine;
    g.origin_x = fine.origin_x + plan.offset_x * fine.cell_size;
    g.origin_y = fine.origin_y - plan.offset_y * fine.cell_size;
    g.cell_size = fine.cell_size * plan.factor;
    return g;
}

}  // namespace lczgrid
