#pragma once

// Accuracy assessment of a candidate LCZ grid against the reclassified
// reference: per-class histograms, confusion matrix, diagonal-normalized
// matrix with >1 confusion flags, and summary agreement metrics.
//
// Matrix orientation: rows are the candidate (the product under assessment),
// columns the reference. A row is normalized by its diagonal element, so an
// off-diagonal value above 1 marks a class the candidate confuses more often
// than it agrees on. The orientation is stated in every report header.

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lczgrid/raster.hpp"
#include "lczgrid/rules.hpp"

namespace lczgrid::assess {

struct ClassHistogram {
    std::map<int, std::int64_t> counts;  // label code -> tile count
    std::int64_t nodata = 0;
};

ClassHistogram class_counts(const Raster<std::int32_t>& grid);

// {1..10, Others}; absent classes keep zero rows so matrices from different
// cities stay shape-compatible.
std::vector<int> default_class_universe();

struct ConfusionMatrix {
    std::vector<int> classes;  // label codes; code 0 is the other-label bucket
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
    std::int64_t total = 0;
    std::int64_t skipped_nodata = 0;
};

// counts(i, j) = tiles labelled classes[i] by the candidate and classes[j]
// by the reference. Tiles NoData in either grid are skipped; labels outside
// `classes` land in the Others bucket (appended if absent).
ConfusionMatrix confusion(const Raster<std::int32_t>& candidate,
                          const Raster<std::int32_t>& reference, std::vector<int> classes);

struct NormalizedMatrix {
    Eigen::MatrixXd values;  // NaN on rows with a zero diagonal
    std::vector<int> undefined_rows;
    std::vector<std::pair<int, int>> flags;  // off-diagonal entries > 1
};

NormalizedMatrix normalize_by_diagonal(const ConfusionMatrix& m);

struct SummaryMetrics {
    double overall_agreement = 0.0;
    std::vector<std::optional<double>> candidate_side;  // diag / row sum
    std::vector<std::optional<double>> reference_side;  // diag / column sum
};

SummaryMetrics summary_metrics(const ConfusionMatrix& m);

struct Report {
    nlohmann::ordered_json json;
    std::string text;
    std::string confusion_csv;
    std::string normalized_csv;
};

// Assembles the full comparison document. `config` is embedded verbatim under
// "config" next to the thresholds, so a report always records the exact rule
// set that produced its reference. Identical inputs produce identical bytes.
Report compare_report(const Raster<std::int32_t>& candidate,
                      const Raster<std::int32_t>& reference, const std::vector<int>& classes,
                      const rules::RuleThresholds& thresholds,
                      const nlohmann::ordered_json& config);

// report.json, report.txt, confusion.csv, normalized.csv under `dir`.
void write_report(const Report& rep, const std::string& dir);

}  // namespace lczgrid::assess
