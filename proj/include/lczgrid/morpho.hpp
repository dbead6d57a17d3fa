#pragma once

// Per-tile morphometric parameters: BSF, HRE, SVF, PSF.
//
// The SVF kernel is the hot path. svf_pixel is the contract implementation:
// horizon-angle search over n_azimuths directions with fixed radial sampling
// and bilinear DSM reads. SvfEngine computes the same quantity with a
// block-maximum pruning structure that skips radial runs provably unable to
// raise the current horizon; its results are bitwise identical to svf_pixel
// (tested), so the pipeline always uses the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lczgrid/raster.hpp"

namespace lczgrid::morpho {

struct TileParams {
    std::optional<double> bsf;
    std::optional<double> hre;  // meters; empty when the tile has no buildings
    std::optional<double> svf;
    std::optional<double> psf;
    bool valid = true;
};

struct SvfConfig {
    int n_azimuths = 32;
    double max_radius = 100.0;  // meters
    double step = 1.0;          // meters; must not exceed the fine cell size
};

inline void validate(const SvfConfig& cfg, double cell_size) {
    if (cfg.n_azimuths < 4) throw UserError("svf.n_azimuths must be >= 4");
    if (!(cfg.max_radius > 0)) throw UserError("svf.max_radius_m must be positive");
    if (!(cfg.step > 0) || cfg.step > cell_size + 1e-12)
        throw UserError("svf.step_m must be in (0, cell_size]");
}

struct MorphoConfig {
    double footprint_threshold = 2.0;  // meters; cells above this are buildings
    SvfConfig svf;
    double ndvi_threshold = 0.2;
    double min_valid_fraction = 0.5;
};

// ------------------------------------------------------------- BSF / HRE

template <class T>
std::optional<double> bsf(const CellWindow<T>& w, double footprint_threshold) {
    std::int64_t valid = 0, built = 0;
    for (int r = 0; r < w.rows; ++r) {
        for (int c = 0; c < w.cols; ++c) {
            const T v = w(r, c);
            if (!w.is_valid(v)) continue;
            ++valid;
            if (static_cast<double>(v) > footprint_threshold) ++built;
        }
    }
    if (valid == 0) return std::nullopt;
    return static_cast<double>(built) / static_cast<double>(valid);
}

// Area-weighted mean height of building cells; empty when none.
template <class T>
std::optional<double> hre(const CellWindow<T>& w, double footprint_threshold) {
    std::int64_t built = 0;
    double sum = 0.0;
    for (int r = 0; r < w.rows; ++r) {
        for (int c = 0; c < w.cols; ++c) {
            const T v = w(r, c);
            if (!w.is_valid(v)) continue;
            if (static_cast<double>(v) > footprint_threshold) {
                ++built;
                sum += static_cast<double>(v);
            }
        }
    }
    if (built == 0) return std::nullopt;
    return sum / static_cast<double>(built);
}

// ------------------------------------------------------------------ SVF

namespace detail {

// One bilinear DSM read shared by the naive and the pruned path so both see
// identical floating-point operations. Position in cell units from the
// raster's top-left corner. Returns the height, or NaN when the position is
// outside the raster extent or all four corners are nodata. Border positions
// replicate edge cells; nodata corners drop out of the weighting; the result
// is capped at the largest participating corner (keeps it bounded by any
// block maximum, which the pruning relies on).
template <class T>
inline double sample_height(const Raster<T>& d, double sc, double sr) {
    const int w = d.width(), h = d.height();
    if (sc < 0.0 || sr < 0.0 || sc > static_cast<double>(w) || sr > static_cast<double>(h))
        return std::numeric_limits<double>::quiet_NaN();
    const double gx = std::clamp(sc - 0.5, 0.0, static_cast<double>(w - 1));
    const double gy = std::clamp(sr - 0.5, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(gx);
    int y0 = static_cast<int>(gy);
    x0 = std::min(x0, w - 2 >= 0 ? w - 2 : 0);
    y0 = std::min(y0, h - 2 >= 0 ? h - 2 : 0);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = gx - x0, fy = gy - y0;

    const T* base = d.cells.data();
    const std::int64_t stride = d.width();
    const T v00 = base[std::int64_t(y0) * stride + x0];
    const T v01 = base[std::int64_t(y0) * stride + x1];
    const T v10 = base[std::int64_t(y1) * stride + x0];
    const T v11 = base[std::int64_t(y1) * stride + x1];

    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w01 = fx * (1.0 - fy);
    const double w10 = (1.0 - fx) * fy;
    const double w11 = fx * fy;

    double acc = 0.0, wsum = 0.0, vmax = -std::numeric_limits<double>::infinity();
    if (d.is_valid(v00)) { acc += w00 * v00; wsum += w00; vmax = std::max(vmax, double(v00)); }
    if (d.is_valid(v01)) { acc += w01 * v01; wsum += w01; vmax = std::max(vmax, double(v01)); }
    if (d.is_valid(v10)) { acc += w10 * v10; wsum += w10; vmax = std::max(vmax, double(v10)); }
    if (d.is_valid(v11)) { acc += w11 * v11; wsum += w11; vmax = std::max(vmax, double(v11)); }
    if (!(wsum > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::min(acc / wsum, vmax);
}

// Radial sampling geometry shared by svf_pixel and SvfEngine: azimuth k of N
// is 2*pi*k/N counterclockwise from map east, k = 1..N; samples at
// r = step, 2*step, ..., <= max_radius.
struct SampleTable {
    int n_azimuths = 0;
    int n_steps = 0;
    std::vector<double> dx;     // [azimuth * n_steps + s], cell units
    std::vector<double> dy;
    std::vector<double> inv_r;  // [s], 1/meters

    SampleTable() = default;
    SampleTable(const SvfConfig& cfg, double cell_size) {
        n_azimuths = cfg.n_azimuths;
        n_steps = static_cast<int>(std::floor(cfg.max_radius / cfg.step + 1e-9));
        dx.resize(std::size_t(n_azimuths) * n_steps);
        dy.resize(std::size_t(n_azimuths) * n_steps);
        inv_r.resize(n_steps);
        for (int s = 0; s < n_steps; ++s) inv_r[s] = 1.0 / ((s + 1) * cfg.step);
        for (int k = 0; k < n_azimuths; ++k) {
            const double az = 2.0 * M_PI * (k + 1) / n_azimuths;
            const double ux = std::cos(az) / cell_size;
            const double uy = -std::sin(az) / cell_size;  // rows grow southward
            for (int s = 0; s < n_steps; ++s) {
                const double r = (s + 1) * cfg.step;
                dx[std::size_t(k) * n_steps + s] = ux * r;
                dy[std::size_t(k) * n_steps + s] = uy * r;
            }
        }
    }
};

inline double sin_sq_of_slope(double m) { return m * m / (1.0 + m * m); }

}  // namespace detail

// Largest elevation angle seen along one azimuth, in [0, pi/2). The free
// azimuth argument makes this the testable primitive; svf_pixel evaluates the
// same search on the fixed 2*pi*k/N fan.
template <class T>
std::optional<double> horizon_angle(const Raster<T>& dsm, int row, int col, double azimuth,
                                    const SvfConfig& cfg) {
    validate(cfg, dsm.georef.cell_size);
    if (row < 0 || row >= dsm.height() || col < 0 || col >= dsm.width())
        throw UserError("horizon_angle: pixel out of bounds");
    if (!dsm.valid_at(row, col)) return std::nullopt;
    const double cs = dsm.georef.cell_size;
    const double h0 = static_cast<double>(dsm(row, col));
    const double pc = col + 0.5, pr = row + 0.5;
    const double ux = std::cos(azimuth) / cs;
    const double uy = -std::sin(azimuth) / cs;
    const int n_steps = static_cast<int>(std::floor(cfg.max_radius / cfg.step + 1e-9));
    double max_slope = 0.0;
    for (int s = 0; s < n_steps; ++s) {
        const double r = (s + 1) * cfg.step;
        const double v = detail::sample_height(dsm, pc + ux * r, pr + uy * r);
        if (std::isnan(v)) continue;  // outside the raster contributes 0
        const double m = (v - h0) * (1.0 / r);
        if (m > max_slope) max_slope = m;
    }
    return std::atan(max_slope);
}

// Isotropic-sky SVF at one pixel: 1 - mean of sin^2(horizon angle) over the
// azimuth fan. Reference implementation; SvfEngine is the fast equivalent.
template <class T>
std::optional<double> svf_pixel(const Raster<T>& dsm, int row, int col, const SvfConfig& cfg) {
    validate(cfg, dsm.georef.cell_size);
    if (row < 0 || row >= dsm.height() || col < 0 || col >= dsm.width())
        throw UserError("svf_pixel: pixel out of bounds");
    if (!dsm.valid_at(row, col)) return std::nullopt;
    const detail::SampleTable table(cfg, dsm.georef.cell_size);
    const double h0 = static_cast<double>(dsm(row, col));
    const double pc = col + 0.5, pr = row + 0.5;
    double acc = 0.0;
    for (int k = 0; k < table.n_azimuths; ++k) {
        const double* dx = table.dx.data() + std::size_t(k) * table.n_steps;
        const double* dy = table.dy.data() + std::size_t(k) * table.n_steps;
        double max_slope = 0.0;
        for (int s = 0; s < table.n_steps; ++s) {
            const double v = detail::sample_height(dsm, pc + dx[s], pr + dy[s]);
            if (std::isnan(v)) continue;
            const double m = (v - h0) * table.inv_r[s];
            if (m > max_slope) max_slope = m;
        }
        acc += detail::sin_sq_of_slope(max_slope);
    }
    return 1.0 - acc / table.n_azimuths;
}

// Fast SVF evaluator: precomputes the sample fan once and a 16x16 block
// maximum of the DSM. A radial run is skipped when even the block maximum
// over its padded footprint cannot beat the horizon found so far; skipped
// samples provably cannot change the result, so outputs equal svf_pixel
// bit for bit.
template <class T>
class SvfEngine {
public:
    SvfEngine(const Raster<T>& dsm, const SvfConfig& cfg)
        : dsm_(dsm), cfg_(cfg), table_(cfg, dsm.georef.cell_size) {
        validate(cfg, dsm.georef.cell_size);
        build_block_max();
        build_runs();
    }

    const SvfConfig& config() const { return cfg_; }

    std::optional<double> pixel(int row, int col) const {
        if (!dsm_.valid_at(row, col)) return std::nullopt;
        const double h0 = static_cast<double>(dsm_(row, col));
        const double pc = col + 0.5, pr = row + 0.5;
        double acc = 0.0;
        for (int k = 0; k < table_.n_azimuths; ++k) {
            const double* dx = table_.dx.data() + std::size_t(k) * table_.n_steps;
            const double* dy = table_.dy.data() + std::size_t(k) * table_.n_steps;
            const Run* runs = runs_.data() + std::size_t(k) * runs_per_azimuth_;
            double max_slope = 0.0;
            for (int ru = 0; ru < runs_per_azimuth_; ++ru) {
                const Run& run = runs[ru];
                const double bound =
                    (region_max(pc + run.min_dx, pc + run.max_dx, pr + run.min_dy,
                                pr + run.max_dy) -
                     h0) *
                    run.inv_r_max;
                if (!(bound > max_slope)) continue;
                for (int s = run.begin; s < run.end; ++s) {
                    const double v = detail::sample_height(dsm_, pc + dx[s], pr + dy[s]);
                    if (std::isnan(v)) continue;
                    const double m = (v - h0) * table_.inv_r[s];
                    if (m > max_slope) max_slope = m;
                }
            }
            acc += detail::sin_sq_of_slope(max_slope);
        }
        return 1.0 - acc / table_.n_azimuths;
    }

private:
    static constexpr int kBlock = 16;
    static constexpr int kRunLen = 16;

    struct Run {
        int begin, end;
        double inv_r_max;
        double min_dx, max_dx, min_dy, max_dy;
    };

    void build_block_max() {
        bw_ = (dsm_.width() + kBlock - 1) / kBlock;
        bh_ = (dsm_.height() + kBlock - 1) / kBlock;
        block_max_.assign(std::size_t(bw_) * bh_, -std::numeric_limits<double>::infinity());
        for (int r = 0; r < dsm_.height(); ++r) {
            const int br = r / kBlock;
            for (int c = 0; c < dsm_.width(); ++c) {
                const T v = dsm_(r, c);
                if (!dsm_.is_valid(v)) continue;
                double& m = block_max_[std::size_t(br) * bw_ + c / kBlock];
                if (static_cast<double>(v) > m) m = static_cast<double>(v);
            }
        }
    }

    void build_runs() {
        runs_per_azimuth_ = (table_.n_steps + kRunLen - 1) / kRunLen;
        runs_.resize(std::size_t(table_.n_azimuths) * runs_per_azimuth_);
        for (int k = 0; k < table_.n_azimuths; ++k) {
            const double* dx = table_.dx.data() + std::size_t(k) * table_.n_steps;
            const double* dy = table_.dy.data() + std::size_t(k) * table_.n_steps;
            for (int ru = 0; ru < runs_per_azimuth_; ++ru) {
                Run run;
                run.begin = ru * kRunLen;
                run.end = std::min(run.begin + kRunLen, table_.n_steps);
                run.inv_r_max = table_.inv_r[run.begin];  // nearest sample first
                run.min_dx = run.max_dx = dx[run.begin];
                run.min_dy = run.max_dy = dy[run.begin];
                for (int s = run.begin + 1; s < run.end; ++s) {
                    run.min_dx = std::min(run.min_dx, dx[s]);
                    run.max_dx = std::max(run.max_dx, dx[s]);
                    run.min_dy = std::min(run.min_dy, dy[s]);
                    run.max_dy = std::max(run.max_dy, dy[s]);
                }
                runs_[std::size_t(k) * runs_per_azimuth_ + ru] = run;
            }
        }
    }

    // Max DSM value over the run footprint, padded so every bilinear corner
    // cell of every (possibly border-clamped) sample is covered.
    double region_max(double x_lo, double x_hi, double y_lo, double y_hi) const {
        int cx0 = static_cast<int>(std::floor(x_lo)) - 2;
        int cx1 = static_cast<int>(std::floor(x_hi)) + 2;
        int cy0 = static_cast<int>(std::floor(y_lo)) - 2;
        int cy1 = static_cast<int>(std::floor(y_hi)) + 2;
        cx0 = std::max(cx0, 0);
        cy0 = std::max(cy0, 0);
        cx1 = std::min(cx1, dsm_.width() - 1);
        cy1 = std::min(cy1, dsm_.height() - 1);
        if (cx0 > cx1 || cy0 > cy1) return -std::numeric_limits<double>::infinity();
        double m = -std::numeric_limits<double>::infinity();
        for (int by = cy0 / kBlock; by <= cy1 / kBlock; ++by)
            for (int bx = cx0 / kBlock; bx <= cx1 / kBlock; ++bx)
                m = std::max(m, block_max_[std::size_t(by) * bw_ + bx]);
        return m;
    }

    const Raster<T>& dsm_;
    SvfConfig cfg_;
    detail::SampleTable table_;
    std::vector<double> block_max_;
    int bw_ = 0, bh_ = 0;
    std::vector<Run> runs_;
    int runs_per_azimuth_ = 0;
};

// Tile SVF: mean over the tile's valid non-building cells (ground-level sky
// exposure); a fully built tile falls back to all valid cells.
template <class T>
std::optional<double> svf_tile(const SvfEngine<T>& engine, const Raster<T>& dsm,
                               const Raster<T>& heights, const TilingPlan& plan, int i, int j,
                               double footprint_threshold) {
    const CellWindow<T> hw = tile_view(heights, plan, i, j);
    const int row0 = plan.offset_y + i * plan.factor;
    const int col0 = plan.offset_x + j * plan.factor;

    double sum = 0.0;
    std::int64_t n = 0;
    for (int pass = 0; pass < 2 && n == 0; ++pass) {
        sum = 0.0;
        n = 0;
        for (int r = 0; r < plan.factor; ++r) {
            for (int c = 0; c < plan.factor; ++c) {
                if (!dsm.valid_at(row0 + r, col0 + c)) continue;
                const T hv = hw(r, c);
                if (pass == 0) {
                    // ground cells only
                    if (!hw.is_valid(hv) || static_cast<double>(hv) > footprint_threshold)
                        continue;
                }
                const auto v = engine.pixel(row0 + r, col0 + c);
                if (!v) continue;
                sum += *v;
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

template <class T>
std::optional<double> svf_tile(const Raster<T>& dsm, const Raster<T>& heights,
                               const TilingPlan& plan, int i, int j, const SvfConfig& cfg,
                               double footprint_threshold) {
    SvfEngine<T> engine(dsm, cfg);
    return svf_tile(engine, dsm, heights, plan, i, j, footprint_threshold);
}

// ------------------------------------------------------------------ PSF

struct NdviValue {
    double value = 0.0;
    bool low_confidence = false;  // set when nir + red == 0
};

inline NdviValue ndvi(double red, double nir) {
    if (red < 0 || nir < 0) throw std::invalid_argument("ndvi: negative reflectance");
    const double denom = nir + red;
    if (denom == 0.0) return {0.0, true};
    return {(nir - red) / denom, false};
}

// Fraction of valid cells that are pervious: NDVI at or above the threshold,
// or flagged as water. Windows must be congruent; water is optional.
template <class T, class U>
std::optional<double> psf(const CellWindow<T>& ndvi_w, const CellWindow<U>* water_w,
                          double ndvi_threshold) {
    if (water_w && (water_w->rows != ndvi_w.rows || water_w->cols != ndvi_w.cols))
        throw AlignmentError("psf: ndvi and water windows are not congruent");
    std::int64_t valid = 0, pervious = 0;
    for (int r = 0; r < ndvi_w.rows; ++r) {
        for (int c = 0; c < ndvi_w.cols; ++c) {
            const T v = ndvi_w(r, c);
            if (!ndvi_w.is_valid(v)) continue;
            ++valid;
            bool wet = false;
            if (water_w) {
                const U wv = (*water_w)(r, c);
                wet = water_w->is_valid(wv) && wv != U{};
            }
            if (static_cast<double>(v) >= ndvi_threshold || wet) ++pervious;
        }
    }
    if (valid == 0) return std::nullopt;
    return static_cast<double>(pervious) / static_cast<double>(valid);
}

struct NdviRaster {
    Raster<float> grid;
    std::int64_t low_confidence_cells = 0;
};

// Cellwise NDVI of two congruent reflectance rasters. Negative reflectance is
// an input error; zero-sum cells become 0 and are counted, not fatal.
inline NdviRaster ndvi_raster(const Raster<float>& red, const Raster<float>& nir) {
    if (red.width() != nir.width() || red.height() != nir.height())
        throw AlignmentError("ndvi: red and nir shapes differ");
    if (!same_georef(red.georef, nir.georef))
        throw AlignmentError("ndvi: red and nir georeferencing differs");
    NdviRaster out;
    out.grid = make_raster<float>(red.width(), red.height(), red.georef, -9999.0f);
    for (int r = 0; r < red.height(); ++r) {
        for (int c = 0; c < red.width(); ++c) {
            const float rv = red(r, c), nv = nir(r, c);
            if (!red.is_valid(rv) || !nir.is_valid(nv)) continue;
            if (rv < 0 || nv < 0)
                throw UserError("ndvi: negative reflectance at row " + std::to_string(r) +
                                " col " + std::to_string(c));
            const NdviValue v = ndvi(rv, nv);
            out.grid.at(r, c) = static_cast<float>(v.value);
            if (v.low_confidence) ++out.low_confidence_cells;
        }
    }
    return out;
}

// ------------------------------------------------------------ composition

template <class T>
TileParams tile_params(const Raster<T>& heights, const Raster<T>& dsm,
                       const SvfEngine<T>& svf_engine, const Raster<float>* ndvi_grid,
                       const Raster<std::uint8_t>* water, const TilingPlan& plan, int i, int j,
                       const MorphoConfig& cfg) {
    TileParams p;
    const CellWindow<T> hw = tile_view(heights, plan, i, j);
    const CellWindow<T> dw = tile_view(dsm, plan, i, j);
    double min_vf = std::min(valid_fraction(hw), valid_fraction(dw));
    std::optional<CellWindow<float>> nw;
    std::optional<CellWindow<std::uint8_t>> ww;
    if (ndvi_grid) {
        nw = tile_view(*ndvi_grid, plan, i, j);
        min_vf = std::min(min_vf, valid_fraction(*nw));
    }
    if (water) {
        ww = tile_view(*water, plan, i, j);
        min_vf = std::min(min_vf, valid_fraction(*ww));
    }
    if (min_vf < cfg.min_valid_fraction) {
        p.valid = false;
        return p;
    }
    p.bsf = bsf(hw, cfg.footprint_threshold);
    p.hre = hre(hw, cfg.footprint_threshold);
    p.svf = svf_tile(svf_engine, dsm, heights, plan, i, j, cfg.footprint_threshold);
    if (nw) p.psf = psf(*nw, ww ? &*ww : nullptr, cfg.ndvi_threshold);
    if (!p.bsf) p.valid = false;  // no valid height cells at all
    return p;
}

}  // namespace lczgrid::morpho
