#pragma once

#include <optional>
#include <string>
#include <vector>

#include "focus/geometry.hpp"
#include "focus/relevance_map.hpp"

namespace focus {

struct Anchor {
  int row = 0;
  int col = 0;
  double score = 0.0;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct RoiProposal {
  GridRect rect;
  Anchor anchor;
  double mean_relevance = 0.0;
  PixelRect pixel_rect;
  std::optional<double> confidence;
  friend bool operator==(const RoiProposal&, const RoiProposal&) = default;
};

struct ProposalConfig {
  int k = 30;
  int s_min = 3;
  int s_max = 5;
  double s_dist = 2.0;
  double expansion_threshold = 0.5;
  double nms_iou_threshold = 0.3;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Greedy top-k scan in descending score order (row-major on ties), keeping a
// cell only if it lies at least s_dist from every kept anchor.
std::vector<Anchor> extract_anchors(const Grid& map, int k, double s_dist);

// Mean of the map over an inclusive rect.
double rect_mean(const Grid& map, const GridRect& rect);

// s_min square around the anchor, shifted inward at borders, grown one cell
// per side per step while the mean stays >= threshold and no side exceeds
// s_max.
RoiProposal expand_roi(const Anchor& anchor, const Grid& map, int s_min, int s_max, double threshold);

// Greedy NMS by anchor score; keeps a proposal iff IoU <= threshold with
// every kept one.
std::vector<RoiProposal> nms(std::vector<RoiProposal> proposals, double iou_threshold);

PixelRect grid_to_pixels(const GridRect& rect, int grid_rows, int grid_cols, ImageSize image);

std::vector<RoiProposal> propose(const Grid& map, const ProposalConfig& config, ImageSize image);

// One JSON object per line: grid rect, pixel rect, anchor, scores.
std::string proposals_to_jsonl(const std::vector<RoiProposal>& proposals, int target_id);
std::vector<RoiProposal> proposals_from_jsonl(const std::string& text);

}  // namespace focus
