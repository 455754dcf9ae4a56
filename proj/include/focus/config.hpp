#pragma once

// Run configuration. File format: one `key = value` per line, `#` comments,
// optional `[section]` headers that prefix the following keys. Strings may be
// double-quoted. Recognized keys:
//
//   relevance.first_layer        int     14
//   relevance.last_layer         int     32
//   relevance.feature_kind       value | key_no_rope
//   relevance.residual           token_space | spatial_identity
//   relevance.sigma              float   1.0
//   relevance.downsample_factor  int     2
//   proposal.k                   int     15 if ranking.n_steps < 4 else 30
//   proposal.s_min               int     3
//   proposal.s_max               int     5
//   proposal.s_dist              float   2
//   proposal.expansion_threshold float   0.5
//   proposal.nms_iou_threshold   float   0.3
//   ranking.n_steps              int     1
//   ranking.overrun              bool    false
//   ranking.t_type2              float   0.6
//   plan.t_obj_dist              float   1200
//   plan.canvas_width            int     1008
//   plan.canvas_height           int     1008
//   ablation.map                 relevance | random
//   ablation.ranking             bool    true
//   paths.output_dir             string  "."
//
// Precedence: defaults < file < flags. Unknown keys are rejected.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "focus/inference_plan.hpp"
#include "focus/ranking.hpp"
#include "focus/relevance_map.hpp"
#include "focus/roi_proposal.hpp"

namespace focus {

enum class MapMode { relevance, random };

struct AblationConfig {
  MapMode map = MapMode::relevance;
  bool ranking = true;  // false: take proposals in relevance order, no queries
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  RelevanceConfig relevance;
  ProposalConfig proposal;
  RankingConfig ranking;
  PlanOptions plan;
  AblationConfig ablation;
  std::string output_dir = ".";

  // key -> "default" | "file" | "flag"
  std::map<std::string, std::string> provenance;

  RunConfig();

  // Parses and applies one value. Throws ConfigError on unknown keys or
  // unparsable values.
  void set(const std::string& key, const std::string& value, const std::string& source);
  std::string get(const std::string& key) const;

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  // Effective values in file syntax with provenance comments.
  std::string to_text() const;

  static const std::vector<std::string>& keys();
};

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

// defaults < file text < overrides, then validate().
RunConfig make_run_config(const std::optional<std::string>& file_text,
                          const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace focus
