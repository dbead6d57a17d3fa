#pragma once

// Two-stage simplified LCZ classifier. Stage 1 maps (BSF, HRE) to one of the
// built classes {1,2,3,4,5,6,9} or Others by first match in table row order;
// stage 2 re-labels open exposed tiles (SVF high, PSF low) among the stage-1
// built classes as class 8. Classes 7 and 10 are never produced.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "lczgrid/morpho.hpp"
#include "lczgrid/raster.hpp"

namespace lczgrid::rules {

enum class LczLabel : int {
    NoData = -1,
    Others = 0,
    Lcz1 = 1,
    Lcz2 = 2,
    Lcz3 = 3,
    Lcz4 = 4,
    Lcz5 = 5,
    Lcz6 = 6,
    Lcz7 = 7,
    Lcz8 = 8,
    Lcz9 = 9,
    Lcz10 = 10,
};

inline int to_int(LczLabel l) { return static_cast<int>(l); }
std::string label_name(int code);

// The twelve numeric bounds of the rule table, defaults exactly as published.
// Bounds written "<=" are inclusive; the compact BSF bound and the high HRE
// bound are strict ">", and the stage-2 comparisons are strict.
struct RuleThresholds {
    double bsf_compact_min = 0.4;  // classes 1-3: BSF > this
    double bsf_open_min = 0.2;     // classes 4-5: this <= BSF <= bsf_open_max
    double bsf_open_max = 0.4;
    double bsf_low6_min = 0.15;  // class 6 BSF interval
    double bsf_low6_max = 0.25;
    double bsf_low9_min = 0.05;  // class 9 BSF interval
    double bsf_low9_max = 0.15;
    double hre_high_min = 25.0;  // classes 1,4: HRE > this; upper bound of 2,5
    double hre_mid_min = 10.0;   // classes 2,5 lower bound; upper bound of 3,6,9
    double hre_low_min = 3.0;    // classes 3,6,9 lower bound
    double svf_open_min = 0.7;   // class 8: SVF > this
    double psf_paved_max = 0.2;  // class 8: PSF < this

    void check() const;
    std::map<std::string, double> to_map() const;
    static RuleThresholds from_map(const std::map<std::string, double>& kv);
};

// (BSF, HRE) -> {1,2,3,4,5,6,9, Others}. Undefined HRE (no buildings) is
// Others, never an error. Throws std::invalid_argument when bsf is outside
// [0, 1].
LczLabel classify_stage1(double bsf, std::optional<double> hre, const RuleThresholds& t);

// Class-8 override: applies only to stage-1 outputs in {1..6, 9}; Others is
// never promoted. Throws std::invalid_argument when svf/psf leave [0, 1].
LczLabel classify_stage2(LczLabel stage1, double svf, double psf, const RuleThresholds& t);

// Full tile classification. Invalid tiles are NoData. When SVF or PSF is
// unavailable the stage-2 override is skipped (a promotion without evidence
// would fabricate the rule's conjunction); *stage2_skipped reports that for
// tiles whose stage-1 label was eligible.
LczLabel classify_tile(const morpho::TileParams& p, const RuleThresholds& t,
                       bool* stage2_skipped = nullptr);

inline constexpr std::int32_t kLabelNoData = -9999;

// One label per tile on the coarse grid; NoData tiles carry the raster
// nodata value, Others is 0.
Raster<std::int32_t> classify_map(const std::vector<morpho::TileParams>& params,
                                  const TilingPlan& plan, const GeoRef& coarse,
                                  const RuleThresholds& t);

}  // namespace lczgrid::rules
