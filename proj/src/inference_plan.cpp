#include "focus/inference_plan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "focus/image_io.hpp"
#include "focus/log.hpp"
#include "focus/ranking.hpp"

namespace focus {

using nlohmann::json;

namespace {

constexpr int kHighlightStroke = 4;

PixelRect full_image(ImageSize image) { return {0, 0, image.width, image.height}; }

InferencePlan interleaved(const std::vector<PixelRect>& rects, ImageSize image) {
  InferencePlan plan;
  plan.kind = PlanKind::interleaved;
  plan.crops.push_back(full_image(image));
  plan.crops.insert(plan.crops.end(), rects.begin(), rects.end());
  plan.highlight_rects = rects;
  return plan;
}

InferencePlan single(const PixelRect& r) {
  InferencePlan plan;
  plan.kind = PlanKind::single_crop;
  plan.crops = {r};
  return plan;
}

InferencePlan combined(const std::vector<PixelRect>& rects) {
  PixelRect box = rects.front();
  for (const auto& r : rects) box = bounding_box(box, r);
  InferencePlan plan;
  plan.kind = PlanKind::combined_rect;
  plan.crops = {box};
  return plan;
}

// Canvas paste over disjoint sources; degrades to a combined rect if the
// sources cannot be separated on the canvas.
InferencePlan canvas_or_combined(const std::vector<PixelRect>& rects, ImageSize image,
                                 const PlanOptions& options) {
  std::vector<MergedRegion> regions;
  for (const auto& r : rects) regions.push_back({r, 0.0, {}});
  std::vector<PixelRect> sources;
  for (const auto& m : merge_overlapping(std::move(regions))) sources.push_back(m.rect);
  // Keep left-to-right, top-to-bottom order for a stable layout.
  std::sort(sources.begin(), sources.end(), [](const PixelRect& a, const PixelRect& b) {
    return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
  });
  if (sources.size() == 1) return single(sources.front());
  try {
    InferencePlan plan;
    plan.kind = PlanKind::canvas_paste;
    plan.canvas = build_canvas(sources, image, options.canvas_size);
    plan.crops = sources;
    return plan;
  } catch (const std::runtime_error& e) {
    log::warn(std::string("canvas layout failed, using combined rect: ") + e.what());
    return combined(sources);
  }
}

json rect_json(const PixelRect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

PixelRect rect_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 4) throw std::invalid_argument("rect must be [x0,y0,x1,y1]");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

std::string_view to_string(PlanKind k) {
  switch (k) {
    case PlanKind::single_crop: return "single_crop";
    case PlanKind::combined_rect: return "combined_rect";
    case PlanKind::canvas_paste: return "canvas_paste";
    default: return "interleaved";
  }
}

PlanKind parse_plan_kind(std::string_view s) {
  if (s == "single_crop") return PlanKind::single_crop;
  if (s == "combined_rect") return PlanKind::combined_rect;
  if (s == "canvas_paste") return PlanKind::canvas_paste;
  if (s == "interleaved") return PlanKind::interleaved;
  throw std::invalid_argument("unknown plan kind '" + std::string(s) + "'");
}

InferencePlan plan_type1(std::vector<SelectedRoi> selected, ImageSize image, io::ViewKind view,
                         const PlanOptions& options) {
  if (selected.empty()) throw std::invalid_argument("plan_type1: empty selection");
  std::stable_sort(selected.begin(), selected.end(),
                   [](const SelectedRoi& a, const SelectedRoi& b) { return a.target_id < b.target_id; });
  std::vector<PixelRect> rects;
  for (const auto& s : selected) rects.push_back(s.rect);

  if (view == io::ViewKind::global_local) return interleaved(rects, image);
  if (rects.size() == 1) return single(rects.front());

  double max_dist = 0.0;
  for (std::size_t i = 0; i < rects.size(); ++i)
    for (std::size_t j = i + 1; j < rects.size(); ++j)
      max_dist = std::max(max_dist, std::hypot(rects[i].center_x() - rects[j].center_x(),
                                               rects[i].center_y() - rects[j].center_y()));
  if (max_dist <= options.t_obj_dist) return combined(rects);
  return canvas_or_combined(rects, image, options);
}

InferencePlan plan_type2(const std::vector<PixelRect>& merged_rects, ImageSize image,
                         io::ViewKind view, const PlanOptions& options) {
  if (merged_rects.empty()) return single(full_image(image));
  if (view == io::ViewKind::global_local) return interleaved(merged_rects, image);
  if (merged_rects.size() == 1) return single(merged_rects.front());
  return canvas_or_combined(merged_rects, image, options);
}

namespace {

std::vector<PixelRect> layout_at(const std::vector<PixelRect>& rects, double sx, double sy,
                                 double scale) {
  std::vector<PixelRect> out;
  out.reserve(rects.size());
  for (const auto& r : rects) {
    const int w = std::max(1, static_cast<int>(std::lround(r.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(r.height() * scale)));
    const int x0 = static_cast<int>(std::lround(r.center_x() * sx - 0.5 * w));
    const int y0 = static_cast<int>(std::lround(r.center_y() * sy - 0.5 * h));
    out.push_back({x0, y0, x0 + w, y0 + h});
  }
  return out;
}

bool fits(const std::vector<PixelRect>& dest, ImageSize canvas) {
  for (std::size_t i = 0; i < dest.size(); ++i) {
    const auto& d = dest[i];
    if (d.x0 < 0 || d.y0 < 0 || d.x1 > canvas.width || d.y1 > canvas.height) return false;
    for (std::size_t j = i + 1; j < dest.size(); ++j)
      if (intersect(d, dest[j]).area() > 0) return false;
  }
  return true;
}

}  // namespace

CanvasLayout build_canvas(const std::vector<PixelRect>& rects, ImageSize image, ImageSize canvas) {
  if (rects.size() < 2) throw std::invalid_argument("build_canvas: need at least two rects");
  if (canvas.width <= 0 || canvas.height <= 0 || image.width <= 0 || image.height <= 0)
    throw std::invalid_argument("build_canvas: empty image or canvas");
  int largest = 0;
  for (const auto& r : rects) {
    if (r.area() == 0) throw std::invalid_argument("build_canvas: degenerate zero-area rect");
    largest = std::max({largest, r.width(), r.height()});
  }
  const double sx = static_cast<double>(canvas.width) / image.width;
  const double sy = static_cast<double>(canvas.height) / image.height;

  double scale = 1.0;
  if (!fits(layout_at(rects, sx, sy, scale), canvas)) {
    double lo = 0.0;
    double hi = 1.0;
    while ((hi - lo) * largest >= 1.0) {
      const double mid = 0.5 * (lo + hi);
      (fits(layout_at(rects, sx, sy, mid), canvas) ? lo : hi) = mid;
    }
    scale = lo;
    if (scale <= 0.0 || !fits(layout_at(rects, sx, sy, scale), canvas))
      throw std::runtime_error("build_canvas: rects cannot be separated on the canvas");
  }

  CanvasLayout layout;
  layout.canvas_size = canvas;
  layout.scale = scale;
  const auto dest = layout_at(rects, sx, sy, scale);
  for (std::size_t i = 0; i < rects.size(); ++i) layout.placements.push_back({rects[i], dest[i]});
  return layout;
}

std::string plan_to_json(const InferencePlan& plan) {
  json crops = json::array();
  for (const auto& r : plan.crops) crops.push_back(rect_json(r));
  json highlights = json::array();
  for (const auto& r : plan.highlight_rects) highlights.push_back(rect_json(r));
  json canvas = nullptr;
  if (plan.canvas) {
    json placements = json::array();
    for (const auto& p : plan.canvas->placements)
      placements.push_back({{"source", rect_json(p.source)}, {"destination", rect_json(p.destination)}});
    canvas = {{"width", plan.canvas->canvas_size.width},
              {"height", plan.canvas->canvas_size.height},
              {"scale", plan.canvas->scale},
              {"placements", placements}};
  }
  return json{{"kind", to_string(plan.kind)},
              {"crops", crops},
              {"canvas", canvas},
              {"highlight_rects", highlights}}
      .dump(2);
}

InferencePlan plan_from_json(const std::string& text) {
  const json j = json::parse(text);
  InferencePlan plan;
  plan.kind = parse_plan_kind(j.at("kind").get<std::string>());
  for (const auto& r : j.at("crops")) plan.crops.push_back(rect_from(r));
  if (j.contains("highlight_rects"))
    for (const auto& r : j["highlight_rects"]) plan.highlight_rects.push_back(rect_from(r));
  if (j.contains("canvas") && !j["canvas"].is_null()) {
    const json& c = j["canvas"];
    CanvasLayout layout;
    layout.canvas_size = {c.at("width").get<int>(), c.at("height").get<int>()};
    layout.scale = c.value("scale", 1.0);
    for (const auto& p : c.at("placements"))
      layout.placements.push_back({rect_from(p.at("source")), rect_from(p.at("destination"))});
    plan.canvas = std::move(layout);
  }
  if (plan.kind == PlanKind::single_crop && plan.crops.size() != 1)
    throw std::invalid_argument("single_crop plan needs exactly one crop");
  if ((plan.kind == PlanKind::canvas_paste) != plan.canvas.has_value())
    throw std::invalid_argument("canvas must be present iff kind is canvas_paste");
  return plan;
}

std::vector<std::vector<std::uint8_t>> execute_plan(const InferencePlan& plan,
                                                    std::span<const std::uint8_t> image_bytes) {
  const Image image = decode_image(image_bytes);
  std::vector<std::vector<std::uint8_t>> out;
  switch (plan.kind) {
    case PlanKind::single_crop:
    case PlanKind::combined_rect:
      if (plan.crops.empty()) throw std::invalid_argument("execute_plan: plan has no crop");
      out.push_back(encode_png(crop(image, plan.crops.front())));
      break;
    case PlanKind::canvas_paste: {
      if (!plan.canvas) throw std::invalid_argument("execute_plan: canvas plan without layout");
      Image canvas(plan.canvas->canvas_size.width, plan.canvas->canvas_size.height);
      for (const auto& p : plan.canvas->placements) paste_scaled(crop(image, p.source), canvas, p.destination);
      out.push_back(encode_png(canvas));
      break;
    }
    case PlanKind::interleaved: {
      Image global = image;
      for (const auto& r : plan.highlight_rects) {
        if (r.x0 < 0 || r.y0 < 0 || r.x1 > image.width || r.y1 > image.height)
          throw std::out_of_range("execute_plan: highlight rect out of bounds");
        stroke_rect(global, r, kHighlightStroke, 255, 0, 0);
      }
      out.push_back(encode_png(global));
      for (std::size_t i = 1; i < plan.crops.size(); ++i) out.push_back(encode_png(crop(image, plan.crops[i])));
      break;
    }
  }
  return out;
}

}  // namespace focus
