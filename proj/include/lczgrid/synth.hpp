#pragma once

// Synthetic city generator and brute-force oracles. This module is the test
// bed that stands in for unavailable LiDAR/NAIP source data. Its oracles are
// deliberately written against the classification rules and the SVF contract
// directly, sharing no code with the morpho/rules implementations they check.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lczgrid/raster.hpp"

namespace lczgrid::synth {

// Scene coordinates: x to the right, y downward from the top-left corner,
// meters. Rectangles are axis-aligned, half-open [x, x+w) x [y, y+d).
struct Rect {
    double x = 0, y = 0, w = 0, d = 0;
    bool overlaps(const Rect& o) const {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.d && o.y < y + d;
    }
};

struct Building {
    Rect rect;
    double height = 0;
};

struct SceneSpec {
    double extent_x = 0, extent_y = 0;  // meters
    double cell_size = 1.0;
    std::uint64_t seed = 0;
    std::string crs_id = "synthetic";
    std::vector<Building> buildings;
    std::vector<Rect> veg_patches;
    std::vector<Rect> water_patches;
};

SceneSpec scene_from_json_file(const std::string& path);
SceneSpec scene_from_json(const std::string& text);
std::string scene_to_json(const SceneSpec& spec);

// Rejects out-of-extent rectangles, non-positive sizes/heights, and overlaps
// other than building-building (which rasterizes to the max height).
void validate_scene(const SceneSpec& spec);

struct SynthRasters {
    Raster<float> building_height;
    Raster<float> dsm;
    Raster<float> red;
    Raster<float> nir;
    Raster<std::uint8_t> water;
};

// Center-point rasterization: a cell belongs to a rectangle iff its center
// lies inside, so integer-aligned rectangles cover exactly w*d cells.
// Vegetation cells get (red 0.2, nir 0.6); everything else (red 0.3, nir 0.3).
SynthRasters rasterize(const SceneSpec& spec);

struct GuardBand {
    double bsf = 0.01;
    double hre = 0.25;  // meters
    double psf = 0.01;
};

struct GroundTruth {
    double bsf = 0.0;
    std::optional<double> hre;
    double psf = 0.0;
    int stage1_label = 0;  // 0 = Others
    // stage1_label adjusted for the class-8 override where it is decidable
    // from analytic PSF alone; when the override hinges on SVF (which has no
    // closed form), expected_label stays at stage1 and svf_dependent is set.
    int expected_label = 0;
    bool svf_dependent = false;
    bool boundary = false;
};

// Exact per-tile BSF/HRE/PSF from rectangle intersection areas (union of
// overlapping footprints, max-height weighting), plus the rule labels from
// the independent stage-1 oracle. Buildings at or below footprint_threshold
// do not count as roughness elements.
std::vector<GroundTruth> analytic_truth(const SceneSpec& spec, const TilingPlan& plan,
                                        const GuardBand& guard = {},
                                        double footprint_threshold = 2.0);

// Independent coding of the simplified classification rules, first match in
// printed row order. Shares nothing with the rules module.
int oracle_stage1_label(double bsf, std::optional<double> hre);

// Labels reachable when bsf/hre wobble within the guard band, including
// class-8 promotions reachable when psf is within its guard of the 0.2 bound
// or decisively below it. Used for boundary tiles.
std::set<int> oracle_label_set(double bsf, std::optional<double> hre, double psf,
                               const GuardBand& guard = {});

// Slow trusted SVF reference: same isotropic-sky formula, dense azimuths and
// fine radial steps, independently implemented bilinear sampling.
double svf_raymarch_oracle(const Raster<float>& dsm, int row, int col, int n_azimuths,
                           double step_m, double max_radius_m);

// ------------------------------------------------------------ city generator

struct CityMix {
    // tile-count fractions by intent; normalized internally
    double empty = 0.08;
    double park = 0.10;
    double water = 0.04;
    double c1 = 0.05, c2 = 0.06, c3 = 0.06;
    double c4 = 0.07, c5 = 0.08, c6 = 0.10;
    double c9 = 0.18;
    double c8 = 0.06;
    double gap = 0.12;  // (bsf, hre) combination no rule covers -> Others
};

struct CityConfig {
    int tiles_x = 10;
    int tiles_y = 10;
    double tile_size = 100.0;
    double cell_size = 1.0;
    std::uint64_t seed = 1;
    CityMix mix;
};

struct GeneratedCity {
    SceneSpec scene;
    std::vector<std::string> tile_intent;  // row-major, one of the mix names
};

// Deterministic given the seed. Intents are assigned by exact quota; every
// built tile except class-8 intents carries a vegetation band that pins PSF
// above the override bound, and class-8 tiles are sparse low-rise with low
// neighbors so their tile SVF is decisively above 0.7.
GeneratedCity generate_city(const CityConfig& cfg);

void write_truth_csv(const std::vector<GroundTruth>& truth, const TilingPlan& plan,
                     const std::string& path);

}  // namespace lczgrid::synth
