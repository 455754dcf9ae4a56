#pragma once

// One question end to end: maps -> proposals -> ranking -> plan.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "focus/config.hpp"
#include "focus/inference_plan.hpp"
#include "focus/metrics.hpp"
#include "focus/ranking.hpp"
#include "focus/relevance_map.hpp"
#include "focus/roi_proposal.hpp"
#include "focus/tensor_io.hpp"

namespace focus {

struct TargetOutcome {
  int target_id = 0;
  std::string surface_text;
  RelevanceMap map;
  std::vector<RoiProposal> proposals;      // relevance order
  std::optional<Type1Result> type1;
  std::optional<Type2Result> type2;
  std::optional<RoiProposal> selected;     // type-1 pick
};

struct SearchResult {
  io::QuestionType question_type = io::QuestionType::type1;
  std::vector<TargetOutcome> targets;
  InferencePlan plan;
  FpReport fp;
  std::string predicted;
  std::vector<PixelRect> proposed_rects;  // selected plus queried
};

// Relevance map (or the random ablation map) for one target.
RelevanceMap target_map(const io::Dump& dump, int target_id, const RunConfig& config);

// Unknown question types run as type-1. With ablation.ranking = false the
// first proposal is taken without any oracle query.
SearchResult run_search(const io::Dump& dump, ExistenceOracle& oracle, const RunConfig& config);

metrics::EvalRecord to_eval_record(const SearchResult& result, const io::DumpHeader& header,
                                   const std::string& question_id);

}  // namespace focus
