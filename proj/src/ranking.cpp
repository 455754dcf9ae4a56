#include "focus/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace focus {

double existence_confidence(double l_yes, double l_no) {
  // 2 * (softmax_yes - 0.5) == tanh((l_yes - l_no) / 2); exactly odd in the gap.
  return std::tanh(0.5 * (l_yes - l_no));
}

FpReport fp_report(const FpCounter& counter) {
  return {counter.map_construction, counter.existence_queries, counter.total()};
}

void RankingConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("ranking.n_steps must be >= 1");
}

double OracleSession::confidence(const PixelRect& rect, const std::string& target_text) {
  Key key{rect.x0, rect.y0, rect.x1, rect.y1, target_text};
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    const Logits l = oracle_->query(rect, target_text);
    ++counter_.existence_queries;
    it = cache_.emplace(std::move(key), l).first;
  }
  return existence_confidence(it->second);
}

Type1Result rank_and_select_type1(const std::vector<RoiProposal>& proposals,
                                  const std::string& target_text, OracleSession& session,
                                  const RankingConfig& config) {
  config.validate();
  if (proposals.empty()) throw std::invalid_argument("rank_and_select_type1: no proposals");

  Type1Result result;
  const auto query = [&](std::size_t i) {
    RoiProposal p = proposals[i];
    p.confidence = session.confidence(p.pixel_rect, target_text);
    result.scored.push_back({std::move(p), i});
  };

  const std::size_t budget = std::min<std::size_t>(static_cast<std::size_t>(config.n_steps), proposals.size());
  for (std::size_t i = 0; i < budget; ++i) query(i);

  if (config.overrun) {
    const auto all_negative = [&] {
      return std::all_of(result.scored.begin(), result.scored.end(),
                         [](const ScoredProposal& s) { return *s.proposal.confidence < 0.0; });
    };
    for (std::size_t i = budget; i < proposals.size() && all_negative(); ++i) {
      query(i);
      result.overran = true;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scored.size(); ++i)
    if (*result.scored[i].proposal.confidence > *result.scored[best].proposal.confidence) best = i;
  result.best = result.scored[best].proposal;
  result.best_rank = result.scored[best].relevance_rank;
  return result;
}

std::vector<MergedRegion> merge_overlapping(std::vector<MergedRegion> regions) {
  const std::size_t n = regions.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (intersect(regions[i].rect, regions[j].rect).area() > 0) parent[find(i)] = find(j);

  std::vector<MergedRegion> merged;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(merged.size());
      merged.push_back(regions[i]);
      continue;
    }
    MergedRegion& m = merged[static_cast<std::size_t>(slot[root])];
    m.rect = bounding_box(m.rect, regions[i].rect);
    m.max_confidence = std::max(m.max_confidence, regions[i].max_confidence);
    m.members.insert(m.members.end(), regions[i].members.begin(), regions[i].members.end());
  }
  // A grown bounding box can newly overlap another component.
  if (merged.size() < n && merged.size() > 1) merged = merge_overlapping(std::move(merged));
  std::stable_sort(merged.begin(), merged.end(), [](const MergedRegion& a, const MergedRegion& b) {
    return a.max_confidence > b.max_confidence;
  });
  return merged;
}

Type2Result select_type2(const std::vector<RoiProposal>& proposals, const std::string& target_text,
                         OracleSession& session, const RankingConfig& config) {
  Type2Result result;
  std::vector<MergedRegion> positives;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    RoiProposal p = proposals[i];
    p.confidence = session.confidence(p.pixel_rect, target_text);
    if (*p.confidence > config.t_type2) positives.push_back({p.pixel_rect, *p.confidence, {i}});
    result.scored.push_back({std::move(p), i});
  }
  result.regions = merge_overlapping(std::move(positives));
  return result;
}

}  // namespace focus
