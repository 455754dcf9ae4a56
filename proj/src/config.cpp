#include "focus/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

namespace focus {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

template <class F>
auto wrap(const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"relevance.first_layer",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.relevance.first_layer = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.relevance.first_layer); }}},
      {"relevance.last_layer",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.relevance.last_layer = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.relevance.last_layer); }}},
      {"relevance.feature_kind",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.relevance.feature_kind = wrap(k, [&] { return io::parse_feature_kind(v); });
        },
        [](const RunConfig& c) { return std::string(io::to_string(c.relevance.feature_kind)); }}},
      {"relevance.residual",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.relevance.residual = wrap(k, [&] { return parse_rollout_residual(v); });
        },
        [](const RunConfig& c) { return std::string(to_string(c.relevance.residual)); }}},
      {"relevance.sigma",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.relevance.sigma = to_double(k, v); },
        [](const RunConfig& c) { return fmt(c.relevance.sigma); }}},
      {"relevance.downsample_factor",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.relevance.downsample_factor = to_int(k, v);
        },
        [](const RunConfig& c) { return std::to_string(c.relevance.downsample_factor); }}},
      {"proposal.k",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.proposal.k = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.proposal.k); }}},
      {"proposal.s_min",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.proposal.s_min = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.proposal.s_min); }}},
      {"proposal.s_max",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.proposal.s_max = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.proposal.s_max); }}},
      {"proposal.s_dist",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.proposal.s_dist = to_double(k, v); },
        [](const RunConfig& c) { return fmt(c.proposal.s_dist); }}},
      {"proposal.expansion_threshold",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.proposal.expansion_threshold = to_double(k, v);
        },
        [](const RunConfig& c) { return fmt(c.proposal.expansion_threshold); }}},
      {"proposal.nms_iou_threshold",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.proposal.nms_iou_threshold = to_double(k, v);
        },
        [](const RunConfig& c) { return fmt(c.proposal.nms_iou_threshold); }}},
      {"ranking.n_steps",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.ranking.n_steps = to_int(k, v);
          if (c.provenance["proposal.k"] == "default") c.proposal.k = c.ranking.n_steps < 4 ? 15 : 30;
        },
        [](const RunConfig& c) { return std::to_string(c.ranking.n_steps); }}},
      {"ranking.overrun",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.ranking.overrun = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.ranking.overrun ? "true" : "false"); }}},
      {"ranking.t_type2",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.ranking.t_type2 = to_double(k, v); },
        [](const RunConfig& c) { return fmt(c.ranking.t_type2); }}},
      {"plan.t_obj_dist",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.plan.t_obj_dist = to_double(k, v); },
        [](const RunConfig& c) { return fmt(c.plan.t_obj_dist); }}},
      {"plan.canvas_width",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.plan.canvas_size.width = to_int(k, v); },
        [](const RunConfig& c) { return std::to_string(c.plan.canvas_size.width); }}},
      {"plan.canvas_height",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.plan.canvas_size.height = to_int(k, v);
        },
        [](const RunConfig& c) { return std::to_string(c.plan.canvas_size.height); }}},
      {"ablation.map",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "relevance") c.ablation.map = MapMode::relevance;
          else if (v == "random") c.ablation.map = MapMode::random;
          else throw ConfigError(k + ": expected relevance or random, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.ablation.map == MapMode::relevance ? "relevance" : "random");
        }}},
      {"ablation.ranking",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.ablation.ranking = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.ablation.ranking ? "true" : "false"); }}},
      {"paths.output_dir",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
        [](const RunConfig& c) { return c.output_dir; }}},
  };
  return table;
}

}  // namespace

RunConfig::RunConfig() {
  proposal.k = ranking.n_steps < 4 ? 15 : 30;
  for (const auto& [key, field] : fields()) provenance[key] = "default";
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [key, field] : fields()) k.push_back(key);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& source) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
  provenance[key] = source;
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(*this);
}

void RunConfig::validate() const {
  if (relevance.first_layer < 0) throw ConfigError("relevance.first_layer must be >= 0");
  if (relevance.last_layer < relevance.first_layer)
    throw ConfigError("relevance.last_layer must be >= relevance.first_layer");
  if (relevance.sigma < 0.0) throw ConfigError("relevance.sigma must be >= 0");
  if (relevance.downsample_factor < 1) throw ConfigError("relevance.downsample_factor must be >= 1");
  try {
    proposal.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("proposal.") + e.what());
  }
  try {
    ranking.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("ranking.") + e.what());
  }
  if (!(plan.t_obj_dist > 0.0)) throw ConfigError("plan.t_obj_dist must be > 0");
  if (plan.canvas_size.width <= 0 || plan.canvas_size.height <= 0)
    throw ConfigError("plan.canvas_width and plan.canvas_height must be > 0");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) {
    const std::string v = field.get(*this);
    const bool quote = key == "relevance.feature_kind" || key == "relevance.residual" ||
                       key == "ablation.map" || key == "paths.output_dir";
    os << key << " = " << (quote ? "\"" + v + "\"" : v) << "  # " << provenance.at(key) << '\n';
  }
  return os.str();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

RunConfig make_run_config(const std::optional<std::string>& file_text,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig c;
  if (file_text)
    for (const auto& [k, v] : parse_config_text(*file_text)) c.set(k, v, "file");
  for (const auto& [k, v] : overrides) c.set(k, v, "flag");
  c.validate();
  return c;
}

}  // namespace focus
