#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "focus/geometry.hpp"
#include "focus/roi_proposal.hpp"

namespace focus {

// Raw first-token logits for "Yes" / "No" to the existence prompt.
struct Logits {
  double yes = 0.0;
  double no = 0.0;
};

class ExistenceOracle {
 public:
  virtual ~ExistenceOracle() = default;
  virtual Logits query(const PixelRect& rect, const std::string& target_text) = 0;
  // Whether distinct questions may query this instance concurrently.
  virtual bool concurrent_safe() const { return false; }
};

// 2 * (softmax([yes, no])_yes - 0.5). Range [-1, 1].
double existence_confidence(double l_yes, double l_no);
inline double existence_confidence(const Logits& l) { return existence_confidence(l.yes, l.no); }

struct FpCounter {
  std::int64_t map_construction = 0;
  std::int64_t existence_queries = 0;
  std::int64_t total() const { return map_construction + existence_queries; }
};

struct FpReport {
  std::int64_t map_construction = 0;
  std::int64_t existence_queries = 0;
  std::int64_t total = 0;
};

// Search-phase forward passes only; final VQA passes never reach the counter.
FpReport fp_report(const FpCounter& counter);

struct RankingConfig {
  int n_steps = 1;
  bool overrun = false;
  double t_type2 = 0.6;
  void validate() const;
};

// Per-question oracle front end: caches (rect, target) answers and bills one
// forward pass per cache miss.
class OracleSession {
 public:
  explicit OracleSession(ExistenceOracle& oracle) : oracle_(&oracle) {}

  // The single prefill that populates the KV cache for this question.
  void record_map_construction() { counter_.map_construction = 1; }

  double confidence(const PixelRect& rect, const std::string& target_text);
  const FpCounter& counter() const { return counter_; }

 private:
  using Key = std::tuple<int, int, int, int, std::string>;
  ExistenceOracle* oracle_;
  FpCounter counter_;
  std::map<Key, Logits> cache_;
};

struct ScoredProposal {
  RoiProposal proposal;  // confidence filled
  std::size_t relevance_rank = 0;
};

struct Type1Result {
  RoiProposal best;
  std::size_t best_rank = 0;
  std::vector<ScoredProposal> scored;  // in query order
  bool overran = false;
};

// Queries the first n_steps proposals; with overrun, keeps going one at a time
// while every answer so far is negative. Picks the max confidence, earliest
// rank on ties.
Type1Result rank_and_select_type1(const std::vector<RoiProposal>& proposals,
                                  const std::string& target_text, OracleSession& session,
                                  const RankingConfig& config);

struct MergedRegion {
  PixelRect rect;
  double max_confidence = 0.0;
  std::vector<std::size_t> members;  // relevance ranks
};

struct Type2Result {
  std::vector<MergedRegion> regions;  // descending max confidence
  std::vector<ScoredProposal> scored;
};

// Queries every proposal, keeps confidence > t_type2 and merges rects that
// overlap (transitively) into their bounding box.
Type2Result select_type2(const std::vector<RoiProposal>& proposals, const std::string& target_text,
                         OracleSession& session, const RankingConfig& config);

// Union of positive-area-overlap components; exposed for reuse by callers
// that merge across targets.
std::vector<MergedRegion> merge_overlapping(std::vector<MergedRegion> regions);

}  // namespace focus
