#include "lczgrid/assess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lczgrid::assess {

using nlohmann::ordered_json;
using rules::label_name;

ClassHistogram class_counts(const Raster<std::int32_t>& grid) {
    ClassHistogram h;
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            const std::int32_t v = grid(r, c);
            if (!grid.is_valid(v))
                ++h.nodata;
            else
                ++h.counts[v];
        }
    }
    return h;
}

std::vector<int> default_class_universe() {
    return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 0};
}

ConfusionMatrix confusion(const Raster<std::int32_t>& candidate,
                          const Raster<std::int32_t>& reference, std::vector<int> classes) {
    if (candidate.width() != reference.width() || candidate.height() != reference.height())
        throw AlignmentError("confusion: grid shapes differ");
    if (!same_georef(candidate.georef, reference.georef))
        throw AlignmentError("confusion: grid georeferencing differs");
    if (classes.empty()) throw UserError("confusion: empty class list");

    std::map<int, int> index;
    for (std::size_t k = 0; k < classes.size(); ++k) index[classes[k]] = static_cast<int>(k);
    int bucket;
    if (auto it = index.find(0); it != index.end()) {
        bucket = it->second;
    } else {
        bucket = static_cast<int>(classes.size());
        classes.push_back(0);
    }

    ConfusionMatrix m;
    m.classes = classes;
    const int k = static_cast<int>(classes.size());
    m.counts.setZero(k, k);
    for (int r = 0; r < candidate.height(); ++r) {
        for (int c = 0; c < candidate.width(); ++c) {
            const std::int32_t cv = candidate(r, c);
            const std::int32_t rv = reference(r, c);
            if (!candidate.is_valid(cv) || !reference.is_valid(rv)) {
                ++m.skipped_nodata;
                continue;
            }
            auto ci = index.find(cv);
            auto ri = index.find(rv);
            const int i = ci == index.end() ? bucket : ci->second;
            const int j = ri == index.end() ? bucket : ri->second;
            m.counts(i, j) += 1;
            ++m.total;
        }
    }
    return m;
}

NormalizedMatrix normalize_by_diagonal(const ConfusionMatrix& m) {
    const int k = static_cast<int>(m.classes.size());
    NormalizedMatrix n;
    n.values.setConstant(k, k, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < k; ++i) {
        const std::int64_t diag = m.counts(i, i);
        if (diag == 0) {
            n.undefined_rows.push_back(i);
            continue;
        }
        for (int j = 0; j < k; ++j)
            n.values(i, j) = static_cast<double>(m.counts(i, j)) / static_cast<double>(diag);
        for (int j = 0; j < k; ++j)
            if (j != i && m.counts(i, j) > diag) n.flags.emplace_back(i, j);
    }
    return n;
}

SummaryMetrics summary_metrics(const ConfusionMatrix& m) {
    if (m.total <= 0) throw UserError("summary_metrics: empty confusion matrix");
    SummaryMetrics s;
    const int k = static_cast<int>(m.classes.size());
    std::int64_t trace = 0;
    for (int i = 0; i < k; ++i) trace += m.counts(i, i);
    s.overall_agreement = static_cast<double>(trace) / static_cast<double>(m.total);
    for (int i = 0; i < k; ++i) {
        const std::int64_t row = m.counts.row(i).sum();
        const std::int64_t col = m.counts.col(i).sum();
        s.candidate_side.push_back(
            row > 0 ? std::optional<double>(double(m.counts(i, i)) / double(row)) : std::nullopt);
        s.reference_side.push_back(
            col > 0 ? std::optional<double>(double(m.counts(i, i)) / double(col)) : std::nullopt);
    }
    return s;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

ordered_json histogram_json(const ClassHistogram& h) {
    ordered_json counts = ordered_json::object();
    for (const auto& [code, n] : h.counts) counts[label_name(code)] = n;
    return ordered_json{{"counts", counts}, {"nodata", h.nodata}};
}

std::string matrix_csv(const std::vector<int>& classes,
                       const std::function<std::string(int, int)>& cell) {
    std::ostringstream out;
    out << "candidate\\reference";
    for (int c : classes) out << ',' << label_name(c);
    out << '\n';
    for (std::size_t i = 0; i < classes.size(); ++i) {
        out << label_name(classes[i]);
        for (std::size_t j = 0; j < classes.size(); ++j)
            out << ',' << cell(static_cast<int>(i), static_cast<int>(j));
        out << '\n';
    }
    return out.str();
}

void render_table(std::ostringstream& out, const std::vector<int>& classes,
                  const std::function<std::string(int, int)>& cell) {
    const int k = static_cast<int>(classes.size());
    std::size_t w = 6;
    for (int c : classes) w = std::max(w, label_name(c).size());
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) w = std::max(w, cell(i, j).size());
    auto pad = [&](const std::string& s) {
        out << std::string(w + 1 - s.size(), ' ') << s;
    };
    pad("c\\r");
    for (int c : classes) pad(label_name(c));
    out << '\n';
    for (int i = 0; i < k; ++i) {
        pad(label_name(classes[i]));
        for (int j = 0; j < k; ++j) pad(cell(i, j));
        out << '\n';
    }
}

}  // namespace

Report compare_report(const Raster<std::int32_t>& candidate,
                      const Raster<std::int32_t>& reference, const std::vector<int>& classes,
                      const rules::RuleThresholds& thresholds, const ordered_json& config) {
    const ConfusionMatrix m = confusion(candidate, reference, classes);
    const NormalizedMatrix n = normalize_by_diagonal(m);
    const ClassHistogram hc = class_counts(candidate);
    const ClassHistogram hr = class_counts(reference);
    const int k = static_cast<int>(m.classes.size());

    Report rep;
    ordered_json& j = rep.json;
    j["orientation"] = "rows=candidate, cols=reference";
    j["config"] = config.is_null() ? ordered_json::object() : config;
    {
        ordered_json th = ordered_json::object();
        for (const auto& [key, v] : thresholds.to_map()) th[key] = v;
        j["config"]["thresholds"] = th;
    }
    j["histograms"] = ordered_json{{"candidate", histogram_json(hc)},
                                   {"reference", histogram_json(hr)}};
    {
        ordered_json cj;
        cj["classes"] = ordered_json::array();
        for (int c : m.classes) cj["classes"].push_back(label_name(c));
        cj["counts"] = ordered_json::array();
        for (int i = 0; i < k; ++i) {
            ordered_json row = ordered_json::array();
            for (int jj = 0; jj < k; ++jj) row.push_back(m.counts(i, jj));
            cj["counts"].push_back(row);
        }
        cj["total"] = m.total;
        cj["skipped_nodata"] = m.skipped_nodata;
        j["confusion"] = cj;
    }
    {
        ordered_json nj;
        nj["values"] = ordered_json::array();
        for (int i = 0; i < k; ++i) {
            ordered_json row = ordered_json::array();
            for (int jj = 0; jj < k; ++jj) {
                const double v = n.values(i, jj);
                if (std::isnan(v))
                    row.push_back(nullptr);
                else
                    row.push_back(v);
            }
            nj["values"].push_back(row);
        }
        nj["undefined_rows"] = ordered_json::array();
        for (int r : n.undefined_rows) nj["undefined_rows"].push_back(label_name(m.classes[r]));
        nj["flags"] = ordered_json::array();
        for (const auto& [fi, fj] : n.flags)
            nj["flags"].push_back(ordered_json{{"candidate", label_name(m.classes[fi])},
                                               {"reference", label_name(m.classes[fj])},
                                               {"value", n.values(fi, fj)}});
        j["normalized"] = nj;
    }
    {
        const SummaryMetrics s = summary_metrics(m);
        ordered_json mj;
        mj["overall_agreement"] = s.overall_agreement;
        mj["per_class"] = ordered_json::array();
        for (int i = 0; i < k; ++i) {
            ordered_json e;
            e["class"] = label_name(m.classes[i]);
            e["candidate_side"] = s.candidate_side[i] ? ordered_json(*s.candidate_side[i])
                                                      : ordered_json(nullptr);
            e["reference_side"] = s.reference_side[i] ? ordered_json(*s.reference_side[i])
                                                      : ordered_json(nullptr);
            mj["per_class"].push_back(e);
        }
        j["metrics"] = mj;
    }

    // plain-text rendering
    std::ostringstream t;
    t << "LCZ comparison report (rows = candidate, cols = reference)\n";
    t << "tiles compared: " << m.total << "  skipped (NoData): " << m.skipped_nodata << "\n\n";
    t << "class counts (candidate | reference):\n";
    {
        std::map<int, std::pair<std::int64_t, std::int64_t>> merged;
        for (const auto& [c, v] : hc.counts) merged[c].first = v;
        for (const auto& [c, v] : hr.counts) merged[c].second = v;
        for (const auto& [c, v] : merged)
            t << "  " << label_name(c) << ": " << v.first << " | " << v.second << "\n";
        t << "  NoData: " << hc.nodata << " | " << hr.nodata << "\n";
    }
    t << "\nconfusion matrix:\n";
    render_table(t, m.classes, [&](int i, int jj) { return std::to_string(m.counts(i, jj)); });
    t << "\nrow-normalized matrix (row / its diagonal; '-' where diagonal is 0):\n";
    render_table(t, m.classes, [&](int i, int jj) {
        const double v = n.values(i, jj);
        return std::isnan(v) ? std::string("-") : fmt(v);
    });
    t << "\nconfusion flags (off-diagonal > 1):\n";
    if (n.flags.empty()) t << "  none\n";
    for (const auto& [fi, fj] : n.flags)
        t << "  candidate " << label_name(m.classes[fi]) << " vs reference "
          << label_name(m.classes[fj]) << ": " << fmt(n.values(fi, fj)) << "\n";
    t << "\noverall agreement: " << fmt(j["metrics"]["overall_agreement"].get<double>()) << "\n";
    rep.text = t.str();

    rep.confusion_csv = matrix_csv(
        m.classes, [&](int i, int jj) { return std::to_string(m.counts(i, jj)); });
    rep.normalized_csv = matrix_csv(m.classes, [&](int i, int jj) {
        const double v = n.values(i, jj);
        return std::isnan(v) ? std::string("NA") : fmt(v);
    });
    return rep;
}

void write_report(const Report& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto write = [&](const std::string& name, const std::string& content) {
        const fs::path p = fs::path(dir) / name;
        std::ofstream out(p, std::ios::trunc | std::ios::binary);
        if (!out) throw IoError("cannot write " + p.string());
        out << content;
    };
    write("report.json", rep.json.dump(2) + "\n");
    write("report.txt", rep.text);
    write("confusion.csv", rep.confusion_csv);
    write("normalized.csv", rep.normalized_csv);
}

}  // namespace lczgrid::assess
