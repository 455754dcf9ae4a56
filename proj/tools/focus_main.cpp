// focus: command-line front end for the visual-search pipeline.
//
// Exit codes: 0 success, 1 pipeline error, 2 usage or I/O error.

#include <glob.h>

#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "focus/config.hpp"
#include "focus/image_io.hpp"
#include "focus/log.hpp"
#include "focus/metrics.hpp"
#include "focus/pipeline.hpp"
#include "focus/stdio_oracle.hpp"
#include "focus/synthetic.hpp"
#include "focus/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace focus;

namespace {

// Missing inputs, unwritable outputs, bad flags.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> set;
  std::string layers;
  std::optional<int> n_steps;
  bool overrun = false;
  int jobs = 1;
  std::string out_dir;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "Config file (key = value)");
  app->add_option("--set", o.set, "Override a config key: key=value")->allow_extra_args(false);
  app->add_option("--layers", o.layers, "Layer range l:L");
  app->add_option("--n-steps", o.n_steps, "Existence-query budget per target");
  app->add_flag("--overrun", o.overrun, "Keep querying while every answer is negative");
  app->add_option("--jobs,-j", o.jobs, "Dump files processed in parallel")->check(CLI::PositiveNumber);
  app->add_option("--out-dir,-o", o.out_dir, "Output directory");
}

std::string read_text(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
  const auto bytes = io::read_file(path);
  return {bytes.begin(), bytes.end()};
}

RunConfig load_config(const CommonOptions& o) {
  std::optional<std::string> text;
  if (!o.config_path.empty()) text = read_text(o.config_path);
  std::vector<std::pair<std::string, std::string>> flags;
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    flags.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.layers.empty()) {
    const auto colon = o.layers.find(':');
    if (colon == std::string::npos) throw UsageError("--layers expects l:L, got '" + o.layers + "'");
    flags.emplace_back("relevance.first_layer", o.layers.substr(0, colon));
    flags.emplace_back("relevance.last_layer", o.layers.substr(colon + 1));
  }
  if (o.n_steps) flags.emplace_back("ranking.n_steps", std::to_string(*o.n_steps));
  if (o.overrun) flags.emplace_back("ranking.overrun", "true");
  if (!o.out_dir.empty()) flags.emplace_back("paths.output_dir", o.out_dir);
  try {
    return make_run_config(text, flags);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

json config_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& k : RunConfig::keys()) j[k] = {{"value", c.get(k)}, {"source", c.provenance.at(k)}};
  return j;
}

fs::path output_dir(const RunConfig& c) {
  fs::path dir = c.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

io::Dump open_dump(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
  return io::load_dump(path);
}

std::string stem_of(const std::string& path) {
  std::string s = fs::path(path).filename().string();
  for (const char* ext : {".fkv"})
    if (s.size() > std::strlen(ext) && s.ends_with(ext)) s.resize(s.size() - std::strlen(ext));
  return s;
}

void write_text(const fs::path& p, const std::string& text) { io::write_file_atomic(p.string(), text); }

// Runs fn over inputs with up to `jobs` threads; returns the worst exit code.
template <class Fn>
int for_each_input(const std::vector<std::string>& inputs, int jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex err_mutex;
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < inputs.size();) {
      int code = 0;
      std::string msg;
      try {
        fn(inputs[i]);
      } catch (const UsageError& e) {
        code = kExitUsage;
        msg = e.what();
      } catch (const std::exception& e) {
        code = kExitPipeline;
        msg = e.what();
      }
      if (code != 0) {
        std::lock_guard lock(err_mutex);
        std::cerr << "focus: " << inputs[i] << ": " << msg << '\n';
        int prev = worst.load();
        while (code > prev && !worst.compare_exchange_weak(prev, code)) {
        }
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(inputs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return worst.load();
}

// ---- gen ----

struct GenOptions {
  std::uint64_t seed = 0;
  int count = 1;
  double noise = 0.0;
  int grid = 24;
  std::string view = "global";
  int crops = 4;
  int targets = 1;
  int tokens = 2;
  int instances = 1;
  int max_distractors = 2;
  std::string type = "type1";
  std::string out_dir = ".";
};

int cmd_gen(const GenOptions& g) {
  synthetic::SceneOptions o;
  o.noise_level = g.noise;
  o.grid_size = g.grid;
  o.view_kind = io::parse_view_kind(g.view);
  o.crop_count = o.view_kind == io::ViewKind::global ? 0 : g.crops;
  o.target_count = g.targets;
  o.tokens_per_target = g.tokens;
  o.instances_per_target = g.instances;
  o.max_distractors = g.max_distractors;
  o.question_type = io::parse_question_type(g.type);
  CommonOptions common;
  common.out_dir = g.out_dir;
  const fs::path dir = output_dir(load_config(common));
  for (int i = 0; i < g.count; ++i) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(i);
    const synthetic::SyntheticScene scene = synthetic::make_scene(seed, o);
    const synthetic::GeneratedDump dump = synthetic::generate_tensors(scene);
    const std::string stem = "scene_" + std::to_string(seed);
    io::save_dump((dir / (stem + ".fkv")).string(), dump.header, dump.tensors);
    write_text(dir / (stem + ".scene.json"), synthetic::scene_to_json(scene) + "\n");
  }
  std::cout << "wrote " << g.count << " scene(s) to " << dir.string() << '\n';
  return 0;
}

// ---- build-map / render-map ----

int cmd_build_map(const std::vector<std::string>& dumps, const CommonOptions& common) {
  const RunConfig config = load_config(common);
  const fs::path dir = output_dir(config);
  return for_each_input(dumps, common.jobs, [&](const std::string& path) {
    const io::Dump dump = open_dump(path);
    io::DumpHeader header = dump.header();
    header.tensor_index.clear();
    std::vector<io::NamedTensor> tensors;
    for (auto& t : dump.tensors())
      if (!t.name.starts_with("relevance_map/")) tensors.push_back(std::move(t));
    json maps = json::array();
    const std::string stem = stem_of(path);
    for (const auto& target : header.targets) {
      const RelevanceMap m = target_map(dump, target.target_id, config);
      io::Tensor t;
      t.shape = {m.values.rows(), m.values.cols()};
      for (double v : m.values.values()) t.values.push_back(static_cast<float>(v));
      tensors.push_back({relevance_tensor_name(target.target_id), std::move(t)});
      const fs::path pgm = dir / (stem + ".map." + std::to_string(target.target_id) + ".pgm");
      io::write_file_atomic(pgm.string(), encode_pgm16(m.values));
      maps.push_back({{"target_id", target.target_id},
                      {"rows", m.values.rows()},
                      {"cols", m.values.cols()},
                      {"first_layer", m.provenance.first_layer},
                      {"last_layer", m.provenance.last_layer},
                      {"feature_kind", io::to_string(m.provenance.feature_kind)},
                      {"residual", to_string(m.provenance.residual)},
                      {"smoothed", m.provenance.smoothed},
                      {"sigma", m.provenance.sigma},
                      {"downsample_factor", m.provenance.downsample_factor},
                      {"pgm", pgm.filename().string()}});
    }
    io::save_dump((dir / (stem + ".map.fkv")).string(), header, tensors);
    const json meta = {{"source", path}, {"maps", maps}, {"config", config_json(config)}};
    write_text(dir / (stem + ".map.json"), meta.dump(2) + "\n");
  });
}

int cmd_render_map(const std::string& path, int target_id, const std::string& out) {
  const io::Dump dump = open_dump(path);
  const std::string name = relevance_tensor_name(target_id);
  if (!dump.has_tensor(name)) throw UsageError(path + " has no tensor " + name + " (run build-map first)");
  const io::Tensor t = dump.tensor(name);
  if (t.shape.size() != 2) throw std::runtime_error(name + " is not 2-D");
  std::vector<double> v(t.values.begin(), t.values.end());
  const Grid g(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), std::move(v));
  const std::string dest = out.empty() ? stem_of(path) + ".map." + std::to_string(target_id) + ".pgm" : out;
  io::write_file_atomic(dest, encode_pgm16(g));
  return 0;
}

// ---- propose ----

int cmd_propose(const std::vector<std::string>& dumps, const CommonOptions& common) {
  const RunConfig config = load_config(common);
  const fs::path dir = output_dir(config);
  return for_each_input(dumps, common.jobs, [&](const std::string& path) {
    const io::Dump dump = open_dump(path);
    std::string lines;
    for (const auto& target : dump.header().targets) {
      const RelevanceMap m = target_map(dump, target.target_id, config);
      lines += proposals_to_jsonl(propose(m.values, config.proposal, dump.header().image_size), target.target_id);
    }
    write_text(dir / (stem_of(path) + ".rois.jsonl"), lines);
  });
}

// ---- search ----

struct SearchOptions {
  std::string oracle = "synthetic";
  std::string image;
  double flip = 0.0;
};

std::unique_ptr<ExistenceOracle> make_oracle(const SearchOptions& s, const std::string& dump_path) {
  const auto colon = s.oracle.find(':');
  const std::string kind = s.oracle.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.oracle.substr(colon + 1);
  if (kind == "synthetic") {
    std::string scene_path = arg;
    if (scene_path.empty())
      scene_path = (fs::path(dump_path).parent_path() / (stem_of(dump_path) + ".scene.json")).string();
    return std::make_unique<synthetic::GeometricOracle>(synthetic::scene_from_json(read_text(scene_path)), s.flip);
  }
  if (kind == "stdio") {
    if (arg.empty()) throw UsageError("--oracle stdio:<command> needs a command");
    return std::make_unique<StdioOracle>(arg, s.image.empty() ? dump_path : s.image);
  }
  throw UsageError("unknown oracle '" + s.oracle + "' (expected synthetic[:scene.json] or stdio:<command>)");
}

int cmd_search(const std::vector<std::string>& dumps, const CommonOptions& common, const SearchOptions& s) {
  const RunConfig config = load_config(common);
  const fs::path dir = output_dir(config);
  std::mutex out_mutex;
  return for_each_input(dumps, common.jobs, [&](const std::string& path) {
    const io::Dump dump = open_dump(path);
    const auto oracle = make_oracle(s, path);
    const SearchResult r = run_search(dump, *oracle, config);
    const std::string stem = stem_of(path);

    std::string rois;
    for (const auto& t : r.targets) {
      std::vector<RoiProposal> ps = t.proposals;
      const auto fill = [&](const std::vector<ScoredProposal>& scored) {
        for (const auto& sp : scored) ps[sp.relevance_rank].confidence = sp.proposal.confidence;
      };
      if (t.type1) fill(t.type1->scored);
      if (t.type2) fill(t.type2->scored);
      rois += proposals_to_jsonl(ps, t.target_id);
    }
    write_text(dir / (stem + ".rois.jsonl"), rois);

    json plan = json::parse(plan_to_json(r.plan));
    plan["question_id"] = stem;
    plan["question_type"] = io::to_string(r.question_type);
    plan["fp"] = {{"map_construction", r.fp.map_construction},
                  {"existence_queries", r.fp.existence_queries},
                  {"total", r.fp.total}};
    plan["config"] = config_json(config);
    write_text(dir / (stem + ".plan.json"), plan.dump(2) + "\n");

    const metrics::EvalRecord rec = to_eval_record(r, dump.header(), stem);
    write_text(dir / (stem + ".eval.jsonl"), metrics::record_to_json_line(rec) + "\n");

    std::lock_guard lock(out_mutex);
    std::cout << stem << ": plan=" << to_string(r.plan.kind) << " predicted=" << r.predicted
              << " fp_total=" << r.fp.total << " (map " << r.fp.map_construction << " + queries "
              << r.fp.existence_queries << ")\n";
  });
}

// ---- plan-exec ----

int cmd_plan_exec(const std::string& plan_path, const std::string& image_path, const std::string& out_dir) {
  const InferencePlan plan = plan_from_json(read_text(plan_path));
  if (!fs::is_regular_file(image_path)) throw UsageError("no such file: " + image_path);
  const auto bytes = io::read_file(image_path);
  const auto images = execute_plan(plan, bytes);
  CommonOptions common;
  common.out_dir = out_dir;
  const fs::path dir = output_dir(load_config(common));
  const std::string stem = fs::path(plan_path).stem().stem().string();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const fs::path p = dir / (stem + ".view" + std::to_string(i) + ".png");
    io::write_file_atomic(p.string(), images[i]);
    std::cout << p.string() << '\n';
  }
  return 0;
}

// ---- eval / plot ----

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& pat : patterns) {
    glob_t g{};
    if (glob(pat.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  return out;
}

struct EvalOptions {
  std::vector<std::string> patterns;
  std::string overlap = "gt_area";
  std::string curves;
  std::string ours;
  std::string ref;
  std::string out;
};

const metrics::Curve& find_curve(const std::vector<metrics::Curve>& curves, const std::string& name) {
  for (const auto& c : curves)
    if (c.name == name) return c;
  throw UsageError("no curve named '" + name + "'");
}

int cmd_eval(const EvalOptions& e) {
  json report = json::object();
  std::ostringstream table;
  table << std::left;
  const metrics::OverlapMode mode = metrics::parse_overlap_mode(e.overlap);

  if (!e.patterns.empty()) {
    const auto files = expand_globs(e.patterns);
    if (files.empty()) throw UsageError("no record files match the given pattern(s)");
    const metrics::LoadedRecords loaded = metrics::load_records(files);
    if (loaded.malformed_lines > 0)
      std::cerr << "focus: skipped " << loaded.malformed_lines << " malformed record line(s)\n";
    if (loaded.records.empty()) throw UsageError("no valid records in " + std::to_string(files.size()) + " file(s)");
    double fp = 0, fp_map = 0, fp_q = 0;
    std::size_t with_gt = 0;
    for (const auto& r : loaded.records) {
      fp += static_cast<double>(r.fp_total);
      fp_map += static_cast<double>(r.fp_map_construction);
      fp_q += static_cast<double>(r.fp_existence_queries);
      with_gt += r.gt_boxes.has_value();
    }
    const double n = static_cast<double>(loaded.records.size());
    report["files"] = files.size();
    report["records"] = loaded.records.size();
    report["malformed_lines"] = loaded.malformed_lines;
    report["accuracy"] = metrics::accuracy(loaded.records);
    report["overlap_mode"] = e.overlap;
    report["recall_at_half"] = with_gt > 0 ? json(metrics::recall_at_half(loaded.records, mode)) : json(nullptr);
    report["mean_fp_total"] = fp / n;
    report["mean_fp_map_construction"] = fp_map / n;
    report["mean_fp_existence_queries"] = fp_q / n;
    table << std::setw(28) << "metric" << "value\n";
    table << std::setw(28) << "records" << loaded.records.size() << '\n';
    table << std::setw(28) << "malformed_lines" << loaded.malformed_lines << '\n';
    table << std::setw(28) << "accuracy" << std::fixed << std::setprecision(4) << report["accuracy"].get<double>() << '\n';
    if (with_gt > 0)
      table << std::setw(28) << ("recall@50% (" + e.overlap + ")") << report["recall_at_half"].get<double>() << '\n';
    table << std::setw(28) << "mean_fp_total" << fp / n << '\n';
    table << std::setw(28) << "mean_fp_map_construction" << fp_map / n << '\n';
    table << std::setw(28) << "mean_fp_existence_queries" << fp_q / n << '\n';
  }

  if (!e.curves.empty()) {
    const auto curves = metrics::curves_from_json(read_text(e.curves));
    if (curves.size() < 2 && (e.ours.empty() || e.ref.empty()))
      throw UsageError("efficiency needs two curves");
    const auto& ours = e.ours.empty() ? curves[0] : find_curve(curves, e.ours);
    const auto& ref = e.ref.empty() ? curves[1] : find_curve(curves, e.ref);
    const metrics::EfficiencyResult eff = metrics::efficiency(ours.points, ref.points);
    report["efficiency"] = {{"ours", ours.name},
                            {"reference", ref.name},
                            {"reference_accuracy", eff.reference_accuracy},
                            {"fp_ours", eff.fp_ours},
                            {"fp_reference", eff.fp_ref},
                            {"ratio", eff.ratio}};
    table << std::setw(28) << "efficiency_ratio" << std::fixed << std::setprecision(4) << eff.ratio << "  ("
          << ref.name << " " << eff.fp_ref << " FP / " << ours.name << " " << eff.fp_ours << " FP at "
          << eff.reference_accuracy * 100.0 << "%)\n";
  }
  if (e.patterns.empty() && e.curves.empty()) throw UsageError("eval needs record files or --curves");

  std::cout << table.str();
  if (!e.out.empty()) io::write_file_atomic(e.out, report.dump(2) + "\n");
  return 0;
}

int cmd_plot(const std::string& curves_path, const std::string& out, const std::string& title) {
  const auto curves = metrics::curves_from_json(read_text(curves_path));
  if (curves.empty()) throw UsageError(curves_path + " has no curves");
  io::write_file_atomic(out, metrics::render_pareto_svg(curves, title));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FOCUS training-free visual search pipeline"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write synthetic .fkv dumps and scene manifests");
  gen_cmd->add_option("--seed", gen.seed, "First seed");
  gen_cmd->add_option("--count", gen.count, "Number of scenes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise", gen.noise, "Planted-feature noise level")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--grid", gen.grid, "Global grid side a")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--view", gen.view, "global | global_local");
  gen_cmd->add_option("--crops", gen.crops, "Crop count b for global_local (perfect square)");
  gen_cmd->add_option("--targets", gen.targets, "Targets per scene")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--tokens", gen.tokens, "Text tokens per target")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--instances", gen.instances, "Planted boxes per target")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-distractors", gen.max_distractors, "Upper bound on distractor boxes");
  gen_cmd->add_option("--type", gen.type, "type1 | type2");
  gen_cmd->add_option("--out-dir,-o", gen.out_dir, "Output directory");

  CommonOptions map_opts;
  std::vector<std::string> map_inputs;
  auto* map_cmd = app.add_subcommand("build-map", "Build relevance maps (.map.fkv, .pgm, .map.json)");
  map_cmd->add_option("dumps", map_inputs, ".fkv dumps")->required();
  add_common(map_cmd, map_opts);

  std::string render_input, render_out;
  int render_target = 0;
  auto* render_cmd = app.add_subcommand("render-map", "Render a stored relevance map as 16-bit PGM");
  render_cmd->add_option("map", render_input, ".map.fkv file")->required();
  render_cmd->add_option("--target", render_target, "Target id");
  render_cmd->add_option("--out,-o", render_out, "Output .pgm");

  CommonOptions prop_opts;
  std::vector<std::string> prop_inputs;
  auto* prop_cmd = app.add_subcommand("propose", "Write relevance-ranked ROI proposals (.rois.jsonl)");
  prop_cmd->add_option("dumps", prop_inputs, ".fkv dumps")->required();
  add_common(prop_cmd, prop_opts);

  CommonOptions search_opts;
  SearchOptions search;
  std::vector<std::string> search_inputs;
  auto* search_cmd = app.add_subcommand("search", "Propose, rank with an oracle, plan (.rois.jsonl .plan.json .eval.jsonl)");
  search_cmd->add_option("dumps", search_inputs, ".fkv dumps")->required();
  search_cmd->add_option("--oracle", search.oracle, "synthetic[:scene.json] | stdio:<command>");
  search_cmd->add_option("--image", search.image, "image_ref sent to a stdio oracle (default: dump path)");
  search_cmd->add_option("--flip", search.flip, "Synthetic oracle flip probability")->check(CLI::Range(0.0, 1.0));
  add_common(search_cmd, search_opts);

  std::string plan_path, plan_image, plan_out = ".";
  auto* exec_cmd = app.add_subcommand("plan-exec", "Compose a plan over an image into PNG views");
  exec_cmd->add_option("plan", plan_path, ".plan.json")->required();
  exec_cmd->add_option("--image", plan_image, "PNG or JPEG source image")->required();
  exec_cmd->add_option("--out-dir,-o", plan_out, "Output directory");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Aggregate .eval.jsonl records and curve efficiency");
  eval_cmd->add_option("records", eval.patterns, "Record files or glob patterns");
  eval_cmd->add_option("--overlap-mode", eval.overlap, "gt_area | iou");
  eval_cmd->add_option("--curves", eval.curves, "Curves JSON for the efficiency ratio");
  eval_cmd->add_option("--ours", eval.ours, "Curve name of the evaluated method");
  eval_cmd->add_option("--ref", eval.ref, "Curve name of the reference method");
  eval_cmd->add_option("--out,-o", eval.out, "Metrics JSON output");

  std::string plot_input, plot_out = "pareto.svg", plot_title = "Accuracy vs forward passes";
  auto* plot_cmd = app.add_subcommand("plot", "Render accuracy-vs-FP curves as SVG");
  plot_cmd->add_option("curves", plot_input, "Curves JSON")->required();
  plot_cmd->add_option("--out,-o", plot_out, "Output .svg");
  plot_cmd->add_option("--title", plot_title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*map_cmd) return cmd_build_map(map_inputs, map_opts);
    if (*render_cmd) return cmd_render_map(render_input, render_target, render_out);
    if (*prop_cmd) return cmd_propose(prop_inputs, prop_opts);
    if (*search_cmd) return cmd_search(search_inputs, search_opts, search);
    if (*exec_cmd) return cmd_plan_exec(plan_path, plan_image, plan_out);
    if (*eval_cmd) return cmd_eval(eval);
    if (*plot_cmd) return cmd_plot(plot_input, plot_out, plot_title);
  } catch (const UsageError& e) {
    std::cerr << "focus: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "focus: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}
