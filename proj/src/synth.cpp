#include "lczgrid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lczgrid::synth {

using nlohmann::ordered_json;

// ----------------------------------------------------------------- JSON

namespace {

Rect rect_from_json(const nlohmann::json& j) {
    Rect r;
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.w = j.at("w").get<double>();
    r.d = j.at("d").get<double>();
    return r;
}

ordered_json rect_to_json(const Rect& r) {
    return ordered_json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"d", r.d}};
}

}  // namespace

SceneSpec scene_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw UserError(std::string("scene JSON parse error: ") + e.what());
    }
    SceneSpec s;
    try {
        s.extent_x = j.at("extent_x").get<double>();
        s.extent_y = j.at("extent_y").get<double>();
        s.cell_size = j.value("cell_size", 1.0);
        s.seed = j.value("seed", std::uint64_t(0));
        s.crs_id = j.value("crs_id", std::string("synthetic"));
        for (const auto& b : j.value("buildings", nlohmann::json::array())) {
            Building bb;
            bb.rect = rect_from_json(b);
            bb.height = b.at("height").get<double>();
            s.buildings.push_back(bb);
        }
        for (const auto& v : j.value("veg", nlohmann::json::array()))
            s.veg_patches.push_back(rect_from_json(v));
        for (const auto& w : j.value("water", nlohmann::json::array()))
            s.water_patches.push_back(rect_from_json(w));
    } catch (const UserError&) {
        throw;
    } catch (const std::exception& e) {
        throw UserError(std::string("scene JSON: ") + e.what());
    }
    return s;
}

SceneSpec scene_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scene_from_json(text);
}

std::string scene_to_json(const SceneSpec& s) {
    ordered_json j;
    j["extent_x"] = s.extent_x;
    j["extent_y"] = s.extent_y;
    j["cell_size"] = s.cell_size;
    j["seed"] = s.seed;
    j["crs_id"] = s.crs_id;
    j["buildings"] = ordered_json::array();
    for (const auto& b : s.buildings) {
        ordered_json jb = rect_to_json(b.rect);
        jb["height"] = b.height;
        j["buildings"].push_back(jb);
    }
    j["veg"] = ordered_json::array();
    for (const auto& v : s.veg_patches) j["veg"].push_back(rect_to_json(v));
    j["water"] = ordered_json::array();
    for (const auto& w : s.water_patches) j["water"].push_back(rect_to_json(w));
    return j.dump(2) + "\n";
}

// ----------------------------------------------------------- validation

namespace {

void check_in_extent(const Rect& r, const SceneSpec& s, const std::string& what, std::size_t idx) {
    if (!(r.w > 0) || !(r.d > 0))
        throw UserError("scene: " + what + " " + std::to_string(idx) + " has non-positive size");
    if (r.x < 0 || r.y < 0 || r.x + r.w > s.extent_x + 1e-9 || r.y + r.d > s.extent_y + 1e-9)
        throw UserError("scene: " + what + " " + std::to_string(idx) + " outside extent");
}

}  // namespace

void validate_scene(const SceneSpec& s) {
    if (!(s.extent_x > 0) || !(s.extent_y > 0)) throw UserError("scene: non-positive extent");
    if (!(s.cell_size > 0)) throw UserError("scene: non-positive cell size");
    const double wx = s.extent_x / s.cell_size;
    const double wy = s.extent_y / s.cell_size;
    if (std::abs(wx - std::round(wx)) > 1e-9 || std::abs(wy - std::round(wy)) > 1e-9)
        throw UserError("scene: extent must be an integer number of cells");

    for (std::size_t i = 0; i < s.buildings.size(); ++i) {
        check_in_extent(s.buildings[i].rect, s, "building", i);
        if (!(s.buildings[i].height > 0))
            throw UserError("scene: building " + std::to_string(i) + " has non-positive height");
    }
    for (std::size_t i = 0; i < s.veg_patches.size(); ++i)
        check_in_extent(s.veg_patches[i], s, "veg patch", i);
    for (std::size_t i = 0; i < s.water_patches.size(); ++i)
        check_in_extent(s.water_patches[i], s, "water patch", i);

    // Overlaps are spec errors except building-building (max-height rule).
    auto fail = [](const std::string& a, std::size_t i, const std::string& b, std::size_t j) {
        throw UserError("scene: " + a + " " + std::to_string(i) + " overlaps " + b + " " +
                        std::to_string(j));
    };
    const auto& veg = s.veg_patches;
    const auto& wat = s.water_patches;
    for (std::size_t i = 0; i < veg.size(); ++i)
        for (std::size_t j = i + 1; j < veg.size(); ++j)
            if (veg[i].overlaps(veg[j])) fail("veg patch", i, "veg patch", j);
    for (std::size_t i = 0; i < wat.size(); ++i)
        for (std::size_t j = i + 1; j < wat.size(); ++j)
            if (wat[i].overlaps(wat[j])) fail("water patch", i, "water patch", j);
    for (std::size_t i = 0; i < veg.size(); ++i)
        for (std::size_t j = 0; j < wat.size(); ++j)
            if (veg[i].overlaps(wat[j])) fail("veg patch", i, "water patch", j);
    for (std::size_t i = 0; i < s.buildings.size(); ++i) {
        for (std::size_t j = 0; j < veg.size(); ++j)
            if (s.buildings[i].rect.overlaps(veg[j])) fail("building", i, "veg patch", j);
        for (std::size_t j = 0; j < wat.size(); ++j)
            if (s.buildings[i].rect.overlaps(wat[j])) fail("building", i, "water patch", j);
    }
}

// --------------------------------------------------------- rasterization

namespace {

// Cells along one axis whose centers fall inside [a, b), clamped to [0, n).
struct CellRange {
    int lo, hi;  // half-open
};

CellRange covered_cells(double a, double b, double cell, int n) {
    int lo = static_cast<int>(std::ceil(a / cell - 0.5));
    int hi = static_cast<int>(std::ceil(b / cell - 0.5));
    return {std::max(lo, 0), std::min(hi, n)};
}

template <class T, class Fn>
void fill_rect(Raster<T>& r, const Rect& rc, double cell, Fn&& fn) {
    const CellRange cx = covered_cells(rc.x, rc.x + rc.w, cell, r.width());
    const CellRange cy = covered_cells(rc.y, rc.y + rc.d, cell, r.height());
    for (int row = cy.lo; row < cy.hi; ++row)
        for (int col = cx.lo; col < cx.hi; ++col) fn(r.at(row, col));
}

}  // namespace

SynthRasters rasterize(const SceneSpec& s) {
    validate_scene(s);
    const int w = static_cast<int>(std::round(s.extent_x / s.cell_size));
    const int h = static_cast<int>(std::round(s.extent_y / s.cell_size));
    GeoRef g;
    g.origin_x = 0.0;
    g.origin_y = s.extent_y;  // scene y grows downward; map y is north-up
    g.cell_size = s.cell_size;
    g.crs_id = s.crs_id;

    SynthRasters out;
    out.building_height = make_raster<float>(w, h, g, -9999.0f);
    out.dsm = make_raster<float>(w, h, g, -9999.0f);
    out.red = make_raster<float>(w, h, g, -9999.0f);
    out.nir = make_raster<float>(w, h, g, -9999.0f);
    out.water = make_raster<std::uint8_t>(w, h, g, 255);

    out.building_height.cells.setZero();
    out.red.cells.setConstant(0.3f);
    out.nir.cells.setConstant(0.3f);
    out.water.cells.setZero();

    for (const auto& b : s.buildings) {
        const float bh = static_cast<float>(b.height);
        fill_rect(out.building_height, b.rect, s.cell_size, [bh](float& v) {
            if (bh > v) v = bh;  // overlapping buildings: max height wins
        });
    }
    out.dsm.cells = out.building_height.cells;
    for (const auto& v : s.veg_patches) {
        fill_rect(out.red, v, s.cell_size, [](float& x) { x = 0.2f; });
        fill_rect(out.nir, v, s.cell_size, [](float& x) { x = 0.6f; });
    }
    for (const auto& wp : s.water_patches)
        fill_rect(out.water, wp, s.cell_size, [](std::uint8_t& x) { x = 1; });
    return out;
}

// -------------------------------------------------------- analytic truth

namespace {

double clipped_area(const Rect& r, double x0, double y0, double x1, double y1) {
    const double ix = std::min(r.x + r.w, x1) - std::max(r.x, x0);
    const double iy = std::min(r.y + r.d, y1) - std::max(r.y, y0);
    return (ix > 0 && iy > 0) ? ix * iy : 0.0;
}

}  // namespace

int oracle_stage1_label(double bsf, std::optional<double> hre_opt) {
    if (!hre_opt.has_value()) return 0;
    const double hre = *hre_opt;
    if (bsf > 0.4 && hre > 25) return 1;
    if (bsf > 0.4 && 10 <= hre && hre <= 25) return 2;
    if (bsf > 0.4 && 3 <= hre && hre <= 10) return 3;
    if (0.2 <= bsf && bsf <= 0.4 && hre > 25) return 4;
    if (0.2 <= bsf && bsf <= 0.4 && 10 <= hre && hre <= 25) return 5;
    if (0.15 <= bsf && bsf <= 0.25 && 3 <= hre && hre <= 10) return 6;
    if (0.05 <= bsf && bsf <= 0.15 && 3 <= hre && hre <= 10) return 9;
    return 0;
}

std::set<int> oracle_label_set(double bsf, std::optional<double> hre, double psf,
                               const GuardBand& guard) {
    std::set<int> out;
    const double db[] = {-guard.bsf, 0.0, guard.bsf};
    const double dh[] = {-guard.hre, 0.0, guard.hre};
    for (double b : db) {
        const double bsf_p = std::clamp(bsf + b, 0.0, 1.0);
        for (double hh : dh) {
            std::optional<double> hre_p = hre;
            if (hre_p) *hre_p = std::max(0.0, *hre_p + hh);
            const int s1 = oracle_stage1_label(bsf_p, hre_p);
            out.insert(s1);
            const bool eligible = (s1 >= 1 && s1 <= 6) || s1 == 9;
            if (eligible && psf < 0.2 + guard.psf) out.insert(8);
            if (!hre) break;  // no HRE to perturb
        }
        if (!hre && out.count(0)) {
            // without buildings only Others is reachable regardless of bsf wobble
        }
    }
    return out;
}

std::vector<GroundTruth> analytic_truth(const SceneSpec& spec, const TilingPlan& plan,
                                        const GuardBand& guard, double footprint_threshold) {
    validate_scene(spec);
    const double tile_m = plan.factor * spec.cell_size;
    std::vector<GroundTruth> out(static_cast<std::size_t>(plan.tile_count()));

    // roughness elements only; low clutter is not a building footprint
    std::vector<Building> relevant;
    for (const auto& b : spec.buildings)
        if (b.height > footprint_threshold) relevant.push_back(b);

    for (int i = 0; i < plan.tiles_y; ++i) {
        for (int j = 0; j < plan.tiles_x; ++j) {
            const double x0 = (plan.offset_x + std::int64_t(j) * plan.factor) * spec.cell_size;
            const double y0 = (plan.offset_y + std::int64_t(i) * plan.factor) * spec.cell_size;
            const double x1 = x0 + tile_m;
            const double y1 = y0 + tile_m;
            const double tile_area = tile_m * tile_m;
            GroundTruth t;

            // union area and max-height weighting via coordinate compression
            std::vector<Rect> clips;
            std::vector<double> heights;
            std::vector<double> xs = {x0, x1}, ys = {y0, y1};
            for (const auto& b : relevant) {
                if (clipped_area(b.rect, x0, y0, x1, y1) <= 0) continue;
                Rect c;
                c.x = std::max(b.rect.x, x0);
                c.y = std::max(b.rect.y, y0);
                c.w = std::min(b.rect.x + b.rect.w, x1) - c.x;
                c.d = std::min(b.rect.y + b.rect.d, y1) - c.y;
                clips.push_back(c);
                heights.push_back(b.height);
                xs.push_back(c.x);
                xs.push_back(c.x + c.w);
                ys.push_back(c.y);
                ys.push_back(c.y + c.d);
            }
            std::sort(xs.begin(), xs.end());
            xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
            std::sort(ys.begin(), ys.end());
            ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

            double built_area = 0.0, height_weighted = 0.0;
            for (std::size_t yi = 0; yi + 1 < ys.size(); ++yi) {
                for (std::size_t xi = 0; xi + 1 < xs.size(); ++xi) {
                    const double cx = 0.5 * (xs[xi] + xs[xi + 1]);
                    const double cy = 0.5 * (ys[yi] + ys[yi + 1]);
                    double hmax = 0.0;
                    bool covered = false;
                    for (std::size_t k = 0; k < clips.size(); ++k) {
                        const Rect& c = clips[k];
                        if (cx >= c.x && cx < c.x + c.w && cy >= c.y && cy < c.y + c.d) {
                            covered = true;
                            hmax = std::max(hmax, heights[k]);
                        }
                    }
                    if (covered) {
                        const double a = (xs[xi + 1] - xs[xi]) * (ys[yi + 1] - ys[yi]);
                        built_area += a;
                        height_weighted += hmax * a;
                    }
                }
            }
            t.bsf = built_area / tile_area;
            if (built_area > 0) t.hre = height_weighted / built_area;

            double pervious = 0.0;
            for (const auto& v : spec.veg_patches) pervious += clipped_area(v, x0, y0, x1, y1);
            for (const auto& w : spec.water_patches) pervious += clipped_area(w, x0, y0, x1, y1);
            t.psf = pervious / tile_area;

            t.stage1_label = oracle_stage1_label(t.bsf, t.hre);
            t.expected_label = t.stage1_label;
            const bool eligible = (t.stage1_label >= 1 && t.stage1_label <= 6) ||
                                  t.stage1_label == 9;
            t.svf_dependent = eligible && t.psf < 0.2;

            const double bsf_edges[] = {0.05, 0.15, 0.2, 0.25, 0.4};
            for (double e : bsf_edges)
                if (std::abs(t.bsf - e) < guard.bsf) t.boundary = true;
            if (t.hre) {
                const double hre_edges[] = {3.0, 10.0, 25.0};
                for (double e : hre_edges)
                    if (std::abs(*t.hre - e) < guard.hre) t.boundary = true;
            }
            if (std::abs(t.psf - 0.2) < guard.psf) t.boundary = true;

            out[static_cast<std::size_t>(i) * plan.tiles_x + j] = t;
        }
    }
    return out;
}

// ------------------------------------------------------------ SVF oracle

namespace {

// Bilinear DSM sample for the oracle, written from the sampling contract:
// positions beyond the raster extent yield no sample, border positions
// replicate edge cells, nodata corners drop out of the weighting.
double oracle_sample(const Raster<float>& d, double cx, double cy) {
    const int w = d.width(), h = d.height();
    if (cx < 0.0 || cy < 0.0 || cx > double(w) || cy > double(h))
        return std::numeric_limits<double>::quiet_NaN();
    const double gx = std::clamp(cx - 0.5, 0.0, double(w - 1));
    const double gy = std::clamp(cy - 0.5, 0.0, double(h - 1));
    const int x0 = std::min(int(gx), w - 2 >= 0 ? w - 2 : 0);
    const int y0 = std::min(int(gy), h - 2 >= 0 ? h - 2 : 0);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = gx - x0, fy = gy - y0;
    const double wgt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const float vals[4] = {d(y0, x0), d(y0, x1), d(y1, x0), d(y1, x1)};
    double acc = 0.0, wsum = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (!d.is_valid(vals[k])) continue;
        acc += wgt[k] * vals[k];
        wsum += wgt[k];
    }
    if (wsum <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return acc / wsum;
}

}  // namespace

double svf_raymarch_oracle(const Raster<float>& dsm, int row, int col, int n_azimuths,
                           double step_m, double max_radius_m) {
    const double cs = dsm.georef.cell_size;
    const double h0 = dsm(row, col);
    const double px = col + 0.5, py = row + 0.5;
    const int n_steps = static_cast<int>(std::floor(max_radius_m / step_m + 1e-9));
    double acc = 0.0;
    for (int k = 1; k <= n_azimuths; ++k) {
        const double az = 2.0 * M_PI * k / n_azimuths;
        const double dx = std::cos(az) / cs;
        const double dy = -std::sin(az) / cs;
        double tan_max = 0.0;
        for (int s = 1; s <= n_steps; ++s) {
            const double r = s * step_m;
            const double v = oracle_sample(dsm, px + dx * r, py + dy * r);
            if (std::isnan(v)) continue;
            const double t = (v - h0) / r;
            if (t > tan_max) tan_max = t;
        }
        const double beta = std::atan(tan_max);
        acc += std::sin(beta) * std::sin(beta);
    }
    return 1.0 - acc / n_azimuths;
}

// --------------------------------------------------------- city generator

namespace {

int draw_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

struct IntentLayout {
    const char* name;
    void (*build)(SceneSpec&, double, double, std::mt19937_64&);
};

void add_veg_band(SceneSpec& s, double tx, double ty) {
    s.veg_patches.push_back({tx + 2, ty + 66, 96, 32});  // psf 0.3072
}

void build_empty(SceneSpec&, double, double, std::mt19937_64& rng) { (void)draw_int(rng, 0, 1); }

void build_park(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    (void)draw_int(rng, 0, 1);
    s.veg_patches.push_back({tx + 2, ty + 2, 96, 96});
}

void build_water(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    (void)draw_int(rng, 0, 1);
    s.water_patches.push_back({tx + 2, ty + 2, 96, 60});
    s.veg_patches.push_back({tx + 2, ty + 66, 96, 30});
}

void dense_slabs(SceneSpec& s, double tx, double ty, std::mt19937_64& rng, int hlo, int hhi) {
    const int dx = draw_int(rng, 2, 8);
    const int h = draw_int(rng, hlo, hhi);
    s.buildings.push_back({{tx + dx, ty + 2, 90, 28}, double(h)});
    s.buildings.push_back({{tx + dx, ty + 34, 90, 28}, double(h)});
    add_veg_band(s, tx, ty);  // bsf 0.504
}

void open_slabs(SceneSpec& s, double tx, double ty, std::mt19937_64& rng, int hlo, int hhi) {
    const int dx1 = draw_int(rng, 2, 50);
    const int dx2 = draw_int(rng, 2, 50);
    const int h = draw_int(rng, hlo, hhi);
    s.buildings.push_back({{tx + dx1, ty + 2, 48, 28}, double(h)});
    s.buildings.push_back({{tx + dx2, ty + 34, 48, 28}, double(h)});
    add_veg_band(s, tx, ty);  // bsf 0.2688
}

void build_c1(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    dense_slabs(s, tx, ty, rng, 28, 36);
}
void build_c2(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    dense_slabs(s, tx, ty, rng, 13, 22);
}
void build_c3(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    dense_slabs(s, tx, ty, rng, 5, 8);
}
void build_c4(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    open_slabs(s, tx, ty, rng, 28, 36);
}
void build_c5(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    open_slabs(s, tx, ty, rng, 13, 22);
}

void build_c6(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    const int dx = draw_int(rng, 2, 50);
    const int dy = draw_int(rng, 2, 22);
    const int h = draw_int(rng, 5, 8);
    s.buildings.push_back({{tx + dx, ty + dy, 48, 40}, double(h)});  // bsf 0.192
    add_veg_band(s, tx, ty);
}

void scattered_houses(SceneSpec& s, double tx, double ty, std::mt19937_64& rng, int hlo, int hhi,
                      bool veg) {
    static const double ax[4] = {8, 55, 8, 55};
    static const double ay[4] = {8, 8, 38, 38};
    const int h = draw_int(rng, hlo, hhi);
    for (int k = 0; k < 4; ++k) {
        const int jx = draw_int(rng, 0, 10);
        const int jy = draw_int(rng, 0, 9);
        s.buildings.push_back({{tx + ax[k] + jx, ty + ay[k] + jy, 15, 16}, double(h)});
    }
    // four 15x16 houses: bsf 0.096
    if (veg) add_veg_band(s, tx, ty);
}

void build_c9(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    scattered_houses(s, tx, ty, rng, 5, 8, true);
}
void build_c8(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    scattered_houses(s, tx, ty, rng, 4, 6, false);  // no veg: psf 0 triggers the override
}

void build_gap(SceneSpec& s, double tx, double ty, std::mt19937_64& rng) {
    const int dy = draw_int(rng, 2, 28);
    const int h = draw_int(rng, 5, 8);
    s.buildings.push_back({{tx + 2, ty + dy, 96, 32}, double(h)});  // bsf 0.3072, no rule row
    add_veg_band(s, tx, ty);
}

const IntentLayout kLayouts[] = {
    {"empty", build_empty}, {"park", build_park}, {"water", build_water},
    {"c1", build_c1},       {"c2", build_c2},     {"c3", build_c3},
    {"c4", build_c4},       {"c5", build_c5},     {"c6", build_c6},
    {"c9", build_c9},       {"c8", build_c8},     {"gap", build_gap},
};

int layout_index(const std::string& name) {
    for (int i = 0; i < static_cast<int>(std::size(kLayouts)); ++i)
        if (name == kLayouts[i].name) return i;
    throw Error("unknown intent " + name);
}

// class-8 tiles demand low-rise surroundings so their tile SVF stays high
bool low_neighbor_ok(const std::string& name) {
    return name == "empty" || name == "park" || name == "water" || name == "c6" ||
           name == "c9" || name == "gap";
}

}  // namespace

GeneratedCity generate_city(const CityConfig& cfg) {
    if (cfg.tiles_x <= 0 || cfg.tiles_y <= 0) throw UserError("generate_city: empty grid");
    const double ratio = cfg.tile_size / cfg.cell_size;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw UserError("generate_city: tile size must be a whole number of cells");

    const int n = cfg.tiles_x * cfg.tiles_y;
    std::mt19937_64 rng(cfg.seed);

    // exact quotas by largest remainder
    const double weights[] = {cfg.mix.empty, cfg.mix.park, cfg.mix.water, cfg.mix.c1,
                              cfg.mix.c2,    cfg.mix.c3,   cfg.mix.c4,    cfg.mix.c5,
                              cfg.mix.c6,    cfg.mix.c9,   cfg.mix.c8,    cfg.mix.gap};
    const int kN = static_cast<int>(std::size(kLayouts));
    double wsum = 0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0)) throw UserError("generate_city: all mix weights are zero");
    std::vector<int> quota(kN, 0);
    std::vector<std::pair<double, int>> rema;
    int assigned = 0;
    for (int k = 0; k < kN; ++k) {
        const double exact = weights[k] / wsum * n;
        quota[k] = static_cast<int>(std::floor(exact));
        assigned += quota[k];
        rema.push_back({exact - quota[k], k});
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; assigned < n; ++k, ++assigned) quota[rema[k % kN].second] += 1;

    const int c8_idx = layout_index("c8");
    std::vector<std::string> intent(static_cast<std::size_t>(n));

    // place class-8 tiles on a spaced lattice; surround them with low intents
    std::vector<int> lattice;
    for (int i = 1; i < cfg.tiles_y; i += 3)
        for (int j = 1; j < cfg.tiles_x; j += 3) lattice.push_back(i * cfg.tiles_x + j);
    std::shuffle(lattice.begin(), lattice.end(), rng);
    int want_c8 = std::min<int>(quota[c8_idx], static_cast<int>(lattice.size()));
    quota[c8_idx] -= want_c8;

    std::vector<int> c8_pos(lattice.begin(), lattice.begin() + want_c8);
    for (int pos : c8_pos) intent[pos] = "c8";

    // low pool feeding class-8 neighborhoods, preferring open intents
    const char* low_pref[] = {"empty", "park", "c9", "gap", "c6", "water"};
    auto take_low = [&]() -> std::string {
        for (const char* nm : low_pref) {
            const int k = layout_index(nm);
            if (quota[k] > 0) {
                quota[k] -= 1;
                return nm;
            }
        }
        return "empty";  // quota drift over exactness: neighbors must stay low
    };
    for (int pos : c8_pos) {
        const int pi = pos / cfg.tiles_x, pj = pos % cfg.tiles_x;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const int ni = pi + di, nj = pj + dj;
                if (ni < 0 || ni >= cfg.tiles_y || nj < 0 || nj >= cfg.tiles_x) continue;
                auto& slot = intent[static_cast<std::size_t>(ni) * cfg.tiles_x + nj];
                if (slot.empty()) slot = take_low();
            }
    }

    std::vector<std::string> pool;
    for (int k = 0; k < kN; ++k)
        for (int c = 0; c < quota[k]; ++c) pool.push_back(kLayouts[k].name);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t next = 0;
    for (auto& slot : intent) {
        if (!slot.empty()) continue;
        if (next < pool.size()) {
            slot = pool[next++];
            if (slot == "c8") slot = "c9";  // stray quota that lost its lattice spot
        } else {
            slot = "empty";
        }
    }
    // leftover pool entries (displaced by neighbor filling) are dropped; the
    // mix is a target, not a contract

    GeneratedCity city;
    city.scene.extent_x = cfg.tiles_x * cfg.tile_size;
    city.scene.extent_y = cfg.tiles_y * cfg.tile_size;
    city.scene.cell_size = cfg.cell_size;
    city.scene.seed = cfg.seed;
    city.tile_intent = intent;

    for (int i = 0; i < cfg.tiles_y; ++i) {
        for (int j = 0; j < cfg.tiles_x; ++j) {
            const std::string& nm = intent[static_cast<std::size_t>(i) * cfg.tiles_x + j];
            const double tx = j * cfg.tile_size;
            const double ty = i * cfg.tile_size;
            kLayouts[layout_index(nm)].build(city.scene, tx, ty, rng);
        }
    }
    validate_scene(city.scene);
    return city;
}

void write_truth_csv(const std::vector<GroundTruth>& truth, const TilingPlan& plan,
                     const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "tile_i,tile_j,bsf,hre,psf,stage1_label,expected_label,svf_dependent,boundary\n";
    char buf[256];
    for (int i = 0; i < plan.tiles_y; ++i) {
        for (int j = 0; j < plan.tiles_x; ++j) {
            const GroundTruth& t = truth[static_cast<std::size_t>(i) * plan.tiles_x + j];
            std::string hre = t.hre ? [&] {
                std::snprintf(buf, sizeof(buf), "%.10g", *t.hre);
                return std::string(buf);
            }() : std::string("NA");
            std::snprintf(buf, sizeof(buf), "%d,%d,%.10g,%s,%.10g,%d,%d,%d,%d\n", i, j, t.bsf,
                          hre.c_str(), t.psf, t.stage1_label, t.expected_label,
                          int(t.svf_dependent), int(t.boundary));
            out << buf;
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace lczgrid::synth
