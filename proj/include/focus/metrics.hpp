#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "focus/geometry.hpp"

namespace focus::metrics {

struct EvalRecord {
  std::string question_id;
  std::string predicted;
  std::string gt_answer;
  std::int64_t fp_total = 1;
  std::int64_t fp_map_construction = 1;
  std::int64_t fp_existence_queries = 0;
  std::vector<PixelRect> proposed_pixel_rects;
  std::optional<std::vector<PixelRect>> gt_boxes;
};

struct CurvePoint {
  double accuracy = 0.0;  // fraction in [0, 1]
  double fp = 0.0;
};

struct Curve {
  std::string name;
  std::vector<CurvePoint> points;
};

enum class OverlapMode { gt_area, iou };

OverlapMode parse_overlap_mode(std::string_view s);

// Exact string match, unweighted mean. Throws on an empty set.
double accuracy(const std::vector<EvalRecord>& records);

// Fraction of records with some proposal covering >= 50% of some GT box
// (GT-area denominator by default). Records without gt_boxes are skipped.
double recall_at_half(const std::vector<EvalRecord>& records, OverlapMode mode = OverlapMode::gt_area);

// True iff `proposal` covers at least half of `gt` under `mode`.
bool overlaps_half(const PixelRect& proposal, const PixelRect& gt, OverlapMode mode = OverlapMode::gt_area);

// Running-max envelope of a curve sorted by FP.
std::vector<CurvePoint> upper_envelope(std::vector<CurvePoint> curve);

// FP needed to reach `target_accuracy` on the envelope, interpolating
// linearly between bracketing points. Returns nullopt if never reached.
std::optional<double> fp_at_accuracy(const std::vector<CurvePoint>& curve, double target_accuracy);

struct EfficiencyResult {
  double reference_accuracy = 0.0;
  double fp_ours = 0.0;
  double fp_ref = 0.0;
  double ratio = 0.0;
};

// FP_ref / FP_ours at the lower of the two curves' top accuracies.
EfficiencyResult efficiency(const std::vector<CurvePoint>& ours, const std::vector<CurvePoint>& ref);
inline double efficiency_ratio(const std::vector<CurvePoint>& ours, const std::vector<CurvePoint>& ref) {
  return efficiency(ours, ref).ratio;
}

std::string record_to_json_line(const EvalRecord& record);
EvalRecord record_from_json_line(const std::string& line);

struct LoadedRecords {
  std::vector<EvalRecord> records;
  std::size_t malformed_lines = 0;
};

// Reads .eval.jsonl files; malformed lines are counted and skipped.
LoadedRecords load_records(const std::vector<std::string>& paths);

// {"methods": [{"name": ..., "points": [{"accuracy": ..., "fp": ...}]}]}
std::vector<Curve> curves_from_json(const std::string& text);

std::string render_pareto_svg(const std::vector<Curve>& curves, const std::string& title);

}  // namespace focus::metrics
