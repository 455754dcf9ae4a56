#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/geometry.hpp"
#include "focus/tensor_io.hpp"

namespace focus {

enum class PlanKind { single_crop, combined_rect, canvas_paste, interleaved };

std::string_view to_string(PlanKind k);
PlanKind parse_plan_kind(std::string_view s);

struct Placement {
  PixelRect source;
  PixelRect destination;
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct CanvasLayout {
  ImageSize canvas_size;
  std::vector<Placement> placements;
  double scale = 1.0;
  friend bool operator==(const CanvasLayout&, const CanvasLayout&) = default;
};

// single_crop: crops = {rect}. combined_rect: crops = {bounding box}.
// canvas_paste: crops = sources, canvas set. interleaved: crops = {full image,
// per-target crops in target_id order}, highlight_rects = every selected rect.
struct InferencePlan {
  PlanKind kind = PlanKind::single_crop;
  std::vector<PixelRect> crops;
  std::optional<CanvasLayout> canvas;
  std::vector<PixelRect> highlight_rects;
  friend bool operator==(const InferencePlan&, const InferencePlan&) = default;
};

struct PlanOptions {
  double t_obj_dist = 1200.0;
  ImageSize canvas_size{1008, 1008};
};

struct SelectedRoi {
  int target_id = 0;
  PixelRect rect;
};

InferencePlan plan_type1(std::vector<SelectedRoi> selected, ImageSize image, io::ViewKind view,
                         const PlanOptions& options = {});

InferencePlan plan_type2(const std::vector<PixelRect>& merged_rects, ImageSize image,
                         io::ViewKind view, const PlanOptions& options = {});

// Destination centers follow the source centers scaled to the canvas; all
// destinations share one scale factor <= 1, bisected down until they fit the
// canvas and do not overlap.
CanvasLayout build_canvas(const std::vector<PixelRect>& rects, ImageSize image, ImageSize canvas);

std::string plan_to_json(const InferencePlan& plan);
InferencePlan plan_from_json(const std::string& text);

// Composes the plan over an encoded PNG/JPEG. Returns one PNG per output
// image: a single image for crop/canvas plans, the highlighted full view
// followed by the crops for interleaved plans.
std::vector<std::vector<std::uint8_t>> execute_plan(const InferencePlan& plan,
                                                    std::span<const std::uint8_t> image_bytes);

}  // namespace focus
