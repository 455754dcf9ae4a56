#include "focus/roi_proposal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace focus {

using nlohmann::json;

void ProposalConfig::validate() const {
  if (k < 1) throw std::invalid_argument("proposal.k must be >= 1");
  if (s_min < 1 || s_min % 2 == 0) throw std::invalid_argument("proposal.s_min must be a positive odd integer");
  if (s_max < 1 || s_max % 2 == 0) throw std::invalid_argument("proposal.s_max must be a positive odd integer");
  if (s_min > s_max) throw std::invalid_argument("proposal.s_min must be <= proposal.s_max");
  if (s_dist < 0.0) throw std::invalid_argument("proposal.s_dist must be >= 0");
  if (expansion_threshold < 0.0 || expansion_threshold > 1.0)
    throw std::invalid_argument("proposal.expansion_threshold must be in [0, 1]");
  if (nms_iou_threshold < 0.0 || nms_iou_threshold > 1.0)
    throw std::invalid_argument("proposal.nms_iou_threshold must be in [0, 1]");
}

std::vector<Anchor> extract_anchors(const Grid& map, int k, double s_dist) {
  std::vector<int> order(map.size());
  std::iota(order.begin(), order.end(), 0);
  const auto values = map.values();
  // Stable sort keeps row-major order among equal scores.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });

  const double min_sq = s_dist * s_dist;
  std::vector<Anchor> anchors;
  for (int idx : order) {
    if (static_cast<int>(anchors.size()) >= k) break;
    const int r = idx / map.cols();
    const int c = idx % map.cols();
    const bool far = std::all_of(anchors.begin(), anchors.end(), [&](const Anchor& a) {
      const double dr = a.row - r;
      const double dc = a.col - c;
      return dr * dr + dc * dc >= min_sq;
    });
    if (far) anchors.push_back({r, c, values[idx]});
  }
  return anchors;
}

double rect_mean(const Grid& map, const GridRect& rect) {
  double sum = 0.0;
  for (int r = rect.top; r <= rect.bottom; ++r)
    for (int c = rect.left; c <= rect.right; ++c) sum += map(r, c);
  return sum / static_cast<double>(rect.area());
}

namespace {

// Places a window of `size` cells centered on `center`, shifted inward to fit
// [0, extent).
std::pair<int, int> centered_span(int center, int size, int extent) {
  size = std::min(size, extent);
  int lo = center - size / 2;
  lo = std::clamp(lo, 0, extent - size);
  return {lo, lo + size - 1};
}

}  // namespace

RoiProposal expand_roi(const Anchor& anchor, const Grid& map, int s_min, int s_max, double threshold) {
  if (anchor.row < 0 || anchor.row >= map.rows() || anchor.col < 0 || anchor.col >= map.cols())
    throw std::out_of_range("expand_roi: anchor out of bounds");

  const auto [top, bottom] = centered_span(anchor.row, s_min, map.rows());
  const auto [left, right] = centered_span(anchor.col, s_min, map.cols());
  GridRect rect{top, left, bottom, right};

  for (;;) {
    const GridRect grown{std::max(rect.top - 1, 0), std::max(rect.left - 1, 0),
                         std::min(rect.bottom + 1, map.rows() - 1),
                         std::min(rect.right + 1, map.cols() - 1)};
    if (grown == rect) break;
    if (grown.height() > s_max || grown.width() > s_max) break;
    if (rect_mean(map, grown) < threshold) break;
    rect = grown;
  }

  RoiProposal p;
  p.rect = rect;
  p.anchor = anchor;
  p.mean_relevance = rect_mean(map, rect);
  return p;
}

std::vector<RoiProposal> nms(std::vector<RoiProposal> proposals, double iou_threshold) {
  std::stable_sort(proposals.begin(), proposals.end(), [](const RoiProposal& a, const RoiProposal& b) {
    if (a.anchor.score != b.anchor.score) return a.anchor.score > b.anchor.score;
    if (a.anchor.row != b.anchor.row) return a.anchor.row < b.anchor.row;
    return a.anchor.col < b.anchor.col;
  });
  std::vector<RoiProposal> kept;
  for (auto& p : proposals) {
    const bool keep = std::all_of(kept.begin(), kept.end(), [&](const RoiProposal& q) {
      return iou(p.rect, q.rect) <= iou_threshold;
    });
    if (keep) kept.push_back(std::move(p));
  }
  return kept;
}

PixelRect grid_to_pixels(const GridRect& rect, int grid_rows, int grid_cols, ImageSize image) {
  const auto floor_div = [](std::int64_t num, std::int64_t den) { return num / den; };
  const auto ceil_div = [](std::int64_t num, std::int64_t den) { return (num + den - 1) / den; };
  PixelRect p;
  p.x0 = static_cast<int>(floor_div(std::int64_t{rect.left} * image.width, grid_cols));
  p.y0 = static_cast<int>(floor_div(std::int64_t{rect.top} * image.height, grid_rows));
  p.x1 = static_cast<int>(ceil_div(std::int64_t{rect.right + 1} * image.width, grid_cols));
  p.y1 = static_cast<int>(ceil_div(std::int64_t{rect.bottom + 1} * image.height, grid_rows));
  p.x0 = std::clamp(p.x0, 0, image.width);
  p.y0 = std::clamp(p.y0, 0, image.height);
  p.x1 = std::clamp(p.x1, 0, image.width);
  p.y1 = std::clamp(p.y1, 0, image.height);
  return p;
}

std::vector<RoiProposal> propose(const Grid& map, const ProposalConfig& config, ImageSize image) {
  config.validate();
  const std::vector<Anchor> anchors = extract_anchors(map, config.k, config.s_dist);
  std::vector<RoiProposal> expanded;
  expanded.reserve(anchors.size());
  for (const Anchor& a : anchors)
    expanded.push_back(expand_roi(a, map, config.s_min, config.s_max, config.expansion_threshold));
  std::vector<RoiProposal> kept = nms(std::move(expanded), config.nms_iou_threshold);
  for (auto& p : kept) p.pixel_rect = grid_to_pixels(p.rect, map.rows(), map.cols(), image);
  return kept;
}

std::string proposals_to_jsonl(const std::vector<RoiProposal>& proposals, int target_id) {
  std::ostringstream out;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto& p = proposals[i];
    json j = {{"target_id", target_id},
              {"rank", i},
              {"grid_rect", {p.rect.top, p.rect.left, p.rect.bottom, p.rect.right}},
              {"pixel_rect", {p.pixel_rect.x0, p.pixel_rect.y0, p.pixel_rect.x1, p.pixel_rect.y1}},
              {"anchor", {{"row", p.anchor.row}, {"col", p.anchor.col}, {"score", p.anchor.score}}},
              {"mean_relevance", p.mean_relevance},
              {"confidence", p.confidence ? json(*p.confidence) : json(nullptr)}};
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<RoiProposal> proposals_from_jsonl(const std::string& text) {
  std::vector<RoiProposal> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    RoiProposal p;
    const auto g = j.at("grid_rect").get<std::vector<int>>();
    const auto px = j.at("pixel_rect").get<std::vector<int>>();
    if (g.size() != 4 || px.size() != 4) throw std::invalid_argument("proposal rect needs 4 entries");
    p.rect = {g[0], g[1], g[2], g[3]};
    p.pixel_rect = {px[0], px[1], px[2], px[3]};
    const json& a = j.at("anchor");
    p.anchor = {a.at("row").get<int>(), a.at("col").get<int>(), a.at("score").get<double>()};
    p.mean_relevance = j.at("mean_relevance").get<double>();
    if (j.contains("confidence") && !j["confidence"].is_null()) p.confidence = j["confidence"].get<double>();
    out.push_back(p);
  }
  return out;
}

}  // namespace focus
