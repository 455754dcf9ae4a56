#include "focus/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "focus/log.hpp"

namespace focus {

namespace {

// Per-dump seed for the random-map ablation: FNV-1a over the first visual row.
std::uint64_t dump_fingerprint(const io::Dump& dump, io::FeatureKind kind) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const io::DumpHeader& hdr = dump.header();
  if (hdr.layers.empty()) return h;
  const std::string name = io::visual_tensor_name(kind, hdr.layers.front());
  if (!dump.has_tensor(name)) return h;
  const io::TensorEntry& e = dump.entry(name);
  std::vector<float> row(static_cast<std::size_t>(hdr.hidden_dim));
  dump.read_row(e, 0, row);
  for (float f : row) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

RelevanceMap target_map(const io::Dump& dump, int target_id, const RunConfig& config) {
  if (config.ablation.map == MapMode::relevance) return build_object_map(dump, target_id, config.relevance);
  const auto [rows, cols] = map_grid_dims(dump.header(), config.relevance);
  const std::uint64_t seed =
      dump_fingerprint(dump, config.relevance.feature_kind) ^ (static_cast<std::uint64_t>(target_id) * 0x9e3779b97f4a7c15ULL);
  RelevanceMap m = random_relevance_map(rows, cols, seed);
  m.provenance.target_ids = {target_id};
  return m;
}

SearchResult run_search(const io::Dump& dump, ExistenceOracle& oracle, const RunConfig& config) {
  config.validate();
  const io::DumpHeader& h = dump.header();
  if (h.targets.empty()) throw std::invalid_argument("run_search: dump has no targets");

  SearchResult result;
  result.question_type =
      h.question.question_type == io::QuestionType::type2 ? io::QuestionType::type2 : io::QuestionType::type1;
  OracleSession session(oracle);
  session.record_map_construction();

  std::vector<SelectedRoi> selected;
  std::vector<MergedRegion> merged;
  bool all_positive = true;
  for (const io::TargetMeta& t : h.targets) {
    TargetOutcome out;
    out.target_id = t.target_id;
    out.surface_text = t.surface_text;
    out.map = target_map(dump, t.target_id, config);
    out.proposals = propose(out.map.values, config.proposal, h.image_size);
    if (out.proposals.empty()) {
      log::warn("run_search: no proposals for target " + std::to_string(t.target_id));
      all_positive = false;
      result.targets.push_back(std::move(out));
      continue;
    }

    if (result.question_type == io::QuestionType::type2) {
      if (config.ablation.ranking) {
        out.type2 = select_type2(out.proposals, t.surface_text, session, config.ranking);
        for (const auto& s : out.type2->scored) result.proposed_rects.push_back(s.proposal.pixel_rect);
        merged.insert(merged.end(), out.type2->regions.begin(), out.type2->regions.end());
      } else {
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config.ranking.n_steps), out.proposals.size());
        for (std::size_t i = 0; i < n; ++i) {
          merged.push_back({out.proposals[i].pixel_rect, 0.0, {i}});
          result.proposed_rects.push_back(out.proposals[i].pixel_rect);
        }
      }
    } else {
      if (config.ablation.ranking) {
        out.type1 = rank_and_select_type1(out.proposals, t.surface_text, session, config.ranking);
        out.selected = out.type1->best;
        for (const auto& s : out.type1->scored) result.proposed_rects.push_back(s.proposal.pixel_rect);
        if (*out.selected->confidence < 0.0) all_positive = false;
      } else {
        out.selected = out.proposals.front();
        result.proposed_rects.push_back(out.selected->pixel_rect);
      }
      selected.push_back({t.target_id, out.selected->pixel_rect});
    }
    result.targets.push_back(std::move(out));
  }

  if (result.question_type == io::QuestionType::type2) {
    merged = merge_overlapping(std::move(merged));
    std::vector<PixelRect> rects;
    for (const auto& m : merged) rects.push_back(m.rect);
    result.plan = plan_type2(rects, h.image_size, h.view_kind, config.plan);
    result.predicted = std::to_string(merged.size());
  } else {
    result.plan = selected.empty() ? plan_type2({}, h.image_size, h.view_kind, config.plan)
                                   : plan_type1(selected, h.image_size, h.view_kind, config.plan);
    result.predicted = all_positive && !selected.empty() ? "yes" : "no";
  }
  result.fp = fp_report(session.counter());
  return result;
}

metrics::EvalRecord to_eval_record(const SearchResult& result, const io::DumpHeader& header,
                                   const std::string& question_id) {
  metrics::EvalRecord r;
  r.question_id = question_id;
  r.predicted = result.predicted;
  r.gt_answer = header.question.gt_answer.value_or("");
  r.fp_total = result.fp.total;
  r.fp_map_construction = result.fp.map_construction;
  r.fp_existence_queries = result.fp.existence_queries;
  r.proposed_pixel_rects = result.proposed_rects;
  if (header.question.gt_boxes) {
    std::vector<PixelRect> boxes;
    for (const auto& g : *header.question.gt_boxes) boxes.push_back(g.rect);
    r.gt_boxes = std::move(boxes);
  }
  return r;
}

}  // namespace focus
