#include "lczgrid/rules.hpp"

#include <stdexcept>

namespace lczgrid::rules {

std::string label_name(int code) {
    if (code == kLabelNoData || code == -1) return "NoData";
    if (code == 0) return "Others";
    return std::to_string(code);
}

void RuleThresholds::check() const {
    if (bsf_open_min > bsf_open_max || bsf_low6_min > bsf_low6_max ||
        bsf_low9_min > bsf_low9_max)
        throw UserError("rules: BSF interval with lower > upper");
    if (hre_low_min > hre_mid_min || hre_mid_min > hre_high_min)
        throw UserError("rules: HRE bounds must be ordered low <= mid <= high");
    for (double v : {bsf_compact_min, bsf_open_min, bsf_open_max, bsf_low6_min, bsf_low6_max,
                     bsf_low9_min, bsf_low9_max, svf_open_min, psf_paved_max})
        if (v < 0.0 || v > 1.0) throw UserError("rules: fraction threshold outside [0,1]");
}

std::map<std::string, double> RuleThresholds::to_map() const {
    return {
        {"bsf_compact_min", bsf_compact_min},
        {"bsf_open_min", bsf_open_min},
        {"bsf_open_max", bsf_open_max},
        {"bsf_low6_min", bsf_low6_min},
        {"bsf_low6_max", bsf_low6_max},
        {"bsf_low9_min", bsf_low9_min},
        {"bsf_low9_max", bsf_low9_max},
        {"hre_high_min", hre_high_min},
        {"hre_mid_min", hre_mid_min},
        {"hre_low_min", hre_low_min},
        {"svf_open_min", svf_open_min},
        {"psf_paved_max", psf_paved_max},
    };
}

RuleThresholds RuleThresholds::from_map(const std::map<std::string, double>& kv) {
    RuleThresholds t;
    auto def = t.to_map();
    for (const auto& [k, v] : kv) {
        if (!def.count(k)) throw UserError("rules: unknown threshold '" + k + "'");
        def[k] = v;
    }
    t.bsf_compact_min = def["bsf_compact_min"];
    t.bsf_open_min = def["bsf_open_min"];
    t.bsf_open_max = def["bsf_open_max"];
    t.bsf_low6_min = def["bsf_low6_min"];
    t.bsf_low6_max = def["bsf_low6_max"];
    t.bsf_low9_min = def["bsf_low9_min"];
    t.bsf_low9_max = def["bsf_low9_max"];
    t.hre_high_min = def["hre_high_min"];
    t.hre_mid_min = def["hre_mid_min"];
    t.hre_low_min = def["hre_low_min"];
    t.svf_open_min = def["svf_open_min"];
    t.psf_paved_max = def["psf_paved_max"];
    t.check();
    return t;
}

LczLabel classify_stage1(double bsf, std::optional<double> hre, const RuleThresholds& t) {
    if (!(bsf >= 0.0 && bsf <= 1.0))
        throw std::invalid_argument("classify_stage1: bsf outside [0,1]");
    if (!hre.has_value()) return LczLabel::Others;
    const double h = *hre;

    // Row predicates in printed table order; shared interval endpoints are
    // resolved by first match.
    const bool bsf_compact = bsf > t.bsf_compact_min;
    const bool bsf_open = bsf >= t.bsf_open_min && bsf <= t.bsf_open_max;
    const bool bsf_low6 = bsf >= t.bsf_low6_min && bsf <= t.bsf_low6_max;
    const bool bsf_low9 = bsf >= t.bsf_low9_min && bsf <= t.bsf_low9_max;
    const bool hre_high = h > t.hre_high_min;
    const bool hre_mid = h >= t.hre_mid_min && h <= t.hre_high_min;
    const bool hre_low = h >= t.hre_low_min && h <= t.hre_mid_min;

    if (bsf_compact && hre_high) return LczLabel::Lcz1;
    if (bsf_compact && hre_mid) return LczLabel::Lcz2;
    if (bsf_compact && hre_low) return LczLabel::Lcz3;
    if (bsf_open && hre_high) return LczLabel::Lcz4;
    if (bsf_open && hre_mid) return LczLabel::Lcz5;
    if (bsf_low6 && hre_low) return LczLabel::Lcz6;
    if (bsf_low9 && hre_low) return LczLabel::Lcz9;
    return LczLabel::Others;
}

LczLabel classify_stage2(LczLabel stage1, double svf, double psf, const RuleThresholds& t) {
    if (!(svf >= 0.0 && svf <= 1.0))
        throw std::invalid_argument("classify_stage2: svf outside [0,1]");
    if (!(psf >= 0.0 && psf <= 1.0))
        throw std::invalid_argument("classify_stage2: psf outside [0,1]");
    const int c = to_int(stage1);
    const bool eligible = (c >= 1 && c <= 6) || c == 9;
    if (eligible && svf > t.svf_open_min && psf < t.psf_paved_max) return LczLabel::Lcz8;
    return stage1;
}

LczLabel classify_tile(const morpho::TileParams& p, const RuleThresholds& t,
                       bool* stage2_skipped) {
    if (stage2_skipped) *stage2_skipped = false;
    if (!p.valid) return LczLabel::NoData;
    const LczLabel s1 = classify_stage1(p.bsf.value_or(0.0), p.hre, t);
    const int c = to_int(s1);
    const bool eligible = (c >= 1 && c <= 6) || c == 9;
    if (!p.svf.has_value() || !p.psf.has_value()) {
        if (stage2_skipped && eligible) *stage2_skipped = true;
        return s1;
    }
    return classify_stage2(s1, *p.svf, *p.psf, t);
}

Raster<std::int32_t> classify_map(const std::vector<morpho::TileParams>& params,
                                  const TilingPlan& plan, const GeoRef& coarse,
                                  const RuleThresholds& t) {
    if (params.size() != static_cast<std::size_t>(plan.tile_count()))
        throw UserError("classify_map: parameters missing for some tiles");
    Raster<std::int32_t> out = make_raster<std::int32_t>(plan.tiles_x, plan.tiles_y, coarse,
                                                         kLabelNoData);
    for (int i = 0; i < plan.tiles_y; ++i) {
        for (int j = 0; j < plan.tiles_x; ++j) {
            const LczLabel l =
                classify_tile(params[static_cast<std::size_t>(i) * plan.tiles_x + j], t);
            out.at(i, j) = l == LczLabel::NoData ? kLabelNoData : to_int(l);
        }
    }
    return out;
}

}  // namespace lczgrid::rules
