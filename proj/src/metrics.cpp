#include "focus/metrics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "focus/log.hpp"

namespace focus::metrics {

using nlohmann::json;

OverlapMode parse_overlap_mode(std::string_view s) {
  if (s == "gt_area" || s == "gt") return OverlapMode::gt_area;
  if (s == "iou") return OverlapMode::iou;
  throw std::invalid_argument("unknown overlap mode '" + std::string(s) + "'");
}

double accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("accuracy: no records");
  std::size_t correct = 0;
  for (const auto& r : records) correct += r.predicted == r.gt_answer ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

bool overlaps_half(const PixelRect& proposal, const PixelRect& gt, OverlapMode mode) {
  if (mode == OverlapMode::iou) return iou(proposal, gt) >= 0.5;
  const std::int64_t gt_area = gt.area();
  if (gt_area == 0) return false;
  // inter / gt >= 1/2 without rounding.
  return 2 * intersect(proposal, gt).area() >= gt_area;
}

double recall_at_half(const std::vector<EvalRecord>& records, OverlapMode mode) {
  std::size_t counted = 0;
  std::size_t hits = 0;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    if (!r.gt_boxes) {
      ++skipped;
      continue;
    }
    ++counted;
    const bool hit = std::any_of(r.proposed_pixel_rects.begin(), r.proposed_pixel_rects.end(),
                                 [&](const PixelRect& p) {
                                   return std::any_of(r.gt_boxes->begin(), r.gt_boxes->end(),
                                                      [&](const PixelRect& g) { return overlaps_half(p, g, mode); });
                                 });
    hits += hit ? 1 : 0;
  }
  if (skipped > 0) log::warn("recall_at_half: skipped " + std::to_string(skipped) + " record(s) without gt_boxes");
  return counted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

std::vector<CurvePoint> upper_envelope(std::vector<CurvePoint> curve) {
  std::stable_sort(curve.begin(), curve.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.fp < b.fp; });
  double best = -std::numeric_limits<double>::infinity();
  for (auto& p : curve) {
    best = std::max(best, p.accuracy);
    p.accuracy = best;
  }
  return curve;
}

std::optional<double> fp_at_accuracy(const std::vector<CurvePoint>& curve, double target) {
  const auto env = upper_envelope(curve);
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (env[i].accuracy < target) continue;
    if (env[i].accuracy == target || i == 0) return env[i].fp;
    const auto& a = env[i - 1];
    const auto& b = env[i];
    return a.fp + (target - a.accuracy) / (b.accuracy - a.accuracy) * (b.fp - a.fp);
  }
  return std::nullopt;
}

EfficiencyResult efficiency(const std::vector<CurvePoint>& ours, const std::vector<CurvePoint>& ref) {
  if (ours.empty() || ref.empty()) throw std::invalid_argument("efficiency: empty curve");
  const auto max_acc = [](const std::vector<CurvePoint>& c) {
    return std::max_element(c.begin(), c.end(), [](auto& a, auto& b) { return a.accuracy < b.accuracy; })->accuracy;
  };
  const auto min_acc = [](const std::vector<CurvePoint>& c) {
    return std::min_element(c.begin(), c.end(), [](auto& a, auto& b) { return a.accuracy < b.accuracy; })->accuracy;
  };
  EfficiencyResult r;
  r.reference_accuracy = std::min(max_acc(ours), max_acc(ref));
  if (r.reference_accuracy < min_acc(ours) && r.reference_accuracy < min_acc(ref))
    throw std::domain_error("efficiency: reference accuracy below both curves (extrapolation refused)");
  r.fp_ours = *fp_at_accuracy(ours, r.reference_accuracy);
  r.fp_ref = *fp_at_accuracy(ref, r.reference_accuracy);
  if (r.fp_ours <= 0.0) throw std::domain_error("efficiency: non-positive FP on our curve");
  r.ratio = r.fp_ref / r.fp_ours;
  return r;
}

namespace {

json rects_json(const std::vector<PixelRect>& rects) {
  json out = json::array();
  for (const auto& r : rects) out.push_back({r.x0, r.y0, r.x1, r.y1});
  return out;
}

std::vector<PixelRect> rects_from(const json& j) {
  std::vector<PixelRect> out;
  for (const auto& r : j) {
    const auto v = r.get<std::vector<int>>();
    if (v.size() != 4) throw std::invalid_argument("rect must have 4 entries");
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

}  // namespace

std::string record_to_json_line(const EvalRecord& r) {
  json j = {{"question_id", r.question_id},
            {"predicted", r.predicted},
            {"gt_answer", r.gt_answer},
            {"fp_total", r.fp_total},
            {"fp_breakdown",
             {{"map_construction", r.fp_map_construction}, {"existence_queries", r.fp_existence_queries}}},
            {"proposed_pixel_rects", rects_json(r.proposed_pixel_rects)},
            {"gt_boxes", r.gt_boxes ? rects_json(*r.gt_boxes) : json(nullptr)}};
  return j.dump();
}

EvalRecord record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  EvalRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.predicted = j.at("predicted").get<std::string>();
  r.gt_answer = j.at("gt_answer").get<std::string>();
  r.fp_total = j.at("fp_total").get<std::int64_t>();
  if (r.fp_total < 1) throw std::invalid_argument("fp_total must be >= 1");
  if (j.contains("fp_breakdown")) {
    r.fp_map_construction = j["fp_breakdown"].value("map_construction", std::int64_t{1});
    r.fp_existence_queries = j["fp_breakdown"].value("existence_queries", r.fp_total - r.fp_map_construction);
  } else {
    r.fp_existence_queries = r.fp_total - r.fp_map_construction;
  }
  r.proposed_pixel_rects = rects_from(j.value("proposed_pixel_rects", json::array()));
  if (j.contains("gt_boxes") && !j["gt_boxes"].is_null()) r.gt_boxes = rects_from(j["gt_boxes"]);
  return r;
}

LoadedRecords load_records(const std::vector<std::string>& paths) {
  LoadedRecords out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.records.push_back(record_from_json_line(line));
      } catch (const std::exception&) {
        ++out.malformed_lines;
      }
    }
  }
  return out;
}

std::vector<Curve> curves_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<Curve> curves;
  for (const auto& m : j.at("methods")) {
    Curve c;
    c.name = m.at("name").get<std::string>();
    for (const auto& p : m.at("points")) {
      CurvePoint cp{p.at("accuracy").get<double>(), p.at("fp").get<double>()};
      if (cp.fp <= 0.0 || cp.accuracy < 0.0 || cp.accuracy > 1.0)
        throw std::invalid_argument("curve point out of range in method " + c.name);
      c.points.push_back(cp);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_pareto_svg(const std::vector<Curve>& curves, const std::string& title) {
  static const char* kColors[] = {"#7b3fa0", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#8c564b"};
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  double max_fp = 1.0, min_acc = 1.0, max_acc = 0.0;
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      max_fp = std::max(max_fp, p.fp);
      min_acc = std::min(min_acc, p.accuracy);
      max_acc = std::max(max_acc, p.accuracy);
    }
  if (max_acc <= min_acc) {
    min_acc = std::max(0.0, min_acc - 0.05);
    max_acc = std::min(1.0, max_acc + 0.05);
  }
  const auto px = [&](double fp) { return L + fp / (max_fp * 1.05) * (W - L - R); };
  const auto py = [&](double acc) { return H - B - (acc - min_acc) / (max_acc - min_acc) * (H - T - B); };

  std::ostringstream svg;
  svg.precision(4);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fp = max_fp * i / 5.0;
    const double acc = min_acc + (max_acc - min_acc) * i / 5.0;
    svg << "<text x=\"" << px(fp) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << fp
        << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(acc) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << acc * 100.0 << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">forward passes</text>\n";
  svg << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">accuracy [%]</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    auto pts = curves[i].points;
    std::stable_sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.fp < b.fp; });
    svg << "<g class=\"series\" data-name=\"" << xml_escape(curves[i].name) << "\">\n<polyline fill=\"none\" stroke=\""
        << color << "\" points=\"";
    for (const auto& p : pts) svg << px(p.fp) << ',' << py(p.accuracy) << ' ';
    svg << "\"/>\n";
    for (const auto& p : pts)
      svg << "<circle cx=\"" << px(p.fp) << "\" cy=\"" << py(p.accuracy) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(i);
    svg << "<rect x=\"" << W - R + 14 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/>\n<text x=\"" << W - R + 30 << "\" y=\"" << ly + 9 << "\" font-size=\"12\">"
        << xml_escape(curves[i].name) << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace focus::metrics
