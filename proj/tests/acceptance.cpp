// Acceptance run: one PASS/FAIL line per criterion.
//
//   focus_acceptance [--allow-fail NAME]... [--jobs N]
//
// Exits 0 iff every criterion passes or is explicitly allowed to fail. An
// allowed failure still prints FAIL.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "focus/log.hpp"
#include "focus/metrics.hpp"
#include "focus/pipeline.hpp"
#include "focus/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace focus;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

int g_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

template <class T, class Fn>
std::vector<T> parallel_map(int n, Fn fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) out[static_cast<std::size_t>(i)] = fn(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(g_jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double x) { return fmt("%.1f%%", 100.0 * x); }

// ---- shared synthetic runs ----

struct SuiteRun {
  bool hit = false;
  double recall = 0.0;
  FpReport fp;
  std::int64_t queries_cap = 0;  // n_steps * targets when overrun is off, else -1
};

std::vector<std::string> g_budget_violations;
std::int64_t g_budget_checked = 0;
std::mutex g_budget_mutex;

void check_budget(const SuiteRun& r, const std::string& where) {
  std::lock_guard lock(g_budget_mutex);
  ++g_budget_checked;
  const bool total_ok = r.fp.total == 1 + r.fp.existence_queries && r.fp.map_construction == 1;
  const bool cap_ok = r.queries_cap < 0 || r.fp.existence_queries <= r.queries_cap;
  if (!total_ok || !cap_ok)
    g_budget_violations.push_back(where + " total=" + std::to_string(r.fp.total) +
                                  " queries=" + std::to_string(r.fp.existence_queries));
}

SuiteRun run_scene(std::uint64_t seed, const synthetic::SceneOptions& opt, const RunConfig& config,
                   double flip = 0.0) {
  const synthetic::SyntheticScene scene = synthetic::make_scene(seed, opt);
  const io::Dump dump = synthetic::generate_dump(scene);
  synthetic::GeometricOracle oracle(scene, flip);
  const SearchResult r = run_search(dump, oracle, config);
  SuiteRun out;
  out.fp = r.fp;
  out.hit = !r.targets.empty() && r.targets.front().selected &&
            oracle.covers_target(r.targets.front().selected->pixel_rect, scene.targets.front().surface_text);
  out.recall = metrics::recall_at_half({to_eval_record(r, dump.header(), "q")});
  out.queries_cap = config.ranking.overrun ? -1
                                           : static_cast<std::int64_t>(config.ranking.n_steps) *
                                                 static_cast<std::int64_t>(scene.targets.size());
  check_budget(out, "seed " + std::to_string(seed));
  return out;
}

RunConfig config_of(int n_steps, bool overrun, MapMode map = MapMode::relevance, bool ranking = true) {
  RunConfig c;
  c.set("ranking.n_steps", std::to_string(n_steps), "flag");
  c.set("ranking.overrun", overrun ? "true" : "false", "flag");
  c.ablation.map = map;
  c.ablation.ranking = ranking;
  c.validate();
  return c;
}

// ---- criteria ----

Outcome confidence_formula() {
  const double c10 = existence_confidence(1.0, 0.0);
  bool ok = std::abs(c10 - 0.462117) <= 1e-6;
  Pcg64 rng(1);
  int asym = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = 10 * rng.normal(), b = 10 * rng.normal();
    if (existence_confidence(a, b) != -existence_confidence(b, a)) ++asym;
    worst = std::max(worst, std::abs(existence_confidence(a, b) - oracle::logistic_confidence(a, b)));
  }
  ok = ok && asym == 0 && worst < 1e-12;
  return {ok, fmt("c(1,0)=%.7f", c10) + ", asymmetric pairs " + std::to_string(asym) + "/1000" +
                  fmt(", max |c - softmax ref| %.1e", worst)};
}

Outcome map_oracle() {
  const auto errs = parallel_map<double>(200, [](int i) {
    const io::Dump d = testing::random_dump(5000 + static_cast<std::uint64_t>(i), {.with_keys = i % 4 == 0});
    const auto& h = d.header();
    double worst = 0.0;
    for (bool literal : {false, true}) {
      RelevanceConfig c;
      c.first_layer = h.layers.front();
      c.last_layer = h.layers.back();
      c.feature_kind = i % 4 == 0 ? io::FeatureKind::key_no_rope : io::FeatureKind::value;
      c.residual = literal ? RolloutResidual::spatial_identity : RolloutResidual::token_space;
      c.downsample_factor =
          std::min({2, h.local_rows > 0 ? h.local_rows : 2, h.local_cols > 0 ? h.local_cols : 2});
      for (const auto& t : h.targets) {
        const RelevanceMap m = build_object_map(d, t.target_id, c);
        const oracle::Mat ref = oracle::object_map(
            d, t.target_id, {c.first_layer, c.last_layer, c.feature_kind, literal, c.sigma, c.downsample_factor});
        if (m.values.rows() != static_cast<int>(ref.size()) || m.values.cols() != static_cast<int>(ref[0].size()))
          return 1e9;
        for (int r = 0; r < m.values.rows(); ++r)
          for (int col = 0; col < m.values.cols(); ++col)
            worst = std::max(worst, std::abs(m.values(r, col) - ref[r][col]));
      }
    }
    return worst;
  });
  const double worst = *std::max_element(errs.begin(), errs.end());
  return {worst <= 1e-5, fmt("200 dumps x 2 residual modes, max abs error %.2e", worst)};
}

Grid random_map(Pcg64& rng, int rows, int cols) {
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  const bool coarse = rng.uniform() < 0.5;
  for (auto& x : v) x = coarse ? rng.uniform_int(0, 4) / 4.0 : rng.uniform();
  Grid g(rows, cols, v);
  normalize_minmax(g);
  return g;
}

oracle::Mat to_mat(const Grid& g) {
  oracle::Mat m = oracle::zeros(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) m[r][c] = g(r, c);
  return m;
}

Outcome proposal_oracles() {
  Pcg64 rng(8);
  int anchor_bad = 0, expand_bad = 0, nms_bad = 0;
  double mean_err = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Grid g = random_map(rng, rng.uniform_int(1, 12), rng.uniform_int(1, 12));
    const oracle::Mat m = to_mat(g);
    const int k = rng.uniform_int(1, 20);
    const double s_dist = rng.uniform_int(0, 6) * 0.5;
    const int s_min = 1 + 2 * rng.uniform_int(0, 2);
    const int s_max = s_min + 2 * rng.uniform_int(0, 3);
    const double thr = rng.uniform();
    const double iou_thr = rng.uniform();

    const auto got = extract_anchors(g, k, s_dist);
    const auto want = oracle::anchors(m, k, s_dist);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].row == want[i].row && got[i].col == want[i].col && got[i].score == want[i].score;
    anchor_bad += !same;

    std::vector<RoiProposal> props;
    std::vector<oracle::Scored> ref_props;
    for (const auto& a : want) {
      const RoiProposal p = expand_roi({a.row, a.col, a.score}, g, s_min, s_max, thr);
      const auto [box, mean] = oracle::expand(a, m, s_min, s_max, thr);
      if (!(p.rect == GridRect{box.top, box.left, box.bottom, box.right})) ++expand_bad;
      mean_err = std::max(mean_err, std::abs(p.mean_relevance - mean));
      props.push_back(p);
      ref_props.push_back({box, a});
    }
    const auto kept = nms(props, iou_thr);
    const auto ref_kept = oracle::suppress(ref_props, iou_thr);
    bool nms_same = kept.size() == ref_kept.size();
    for (std::size_t i = 0; nms_same && i < kept.size(); ++i) {
      const auto& b = ref_kept[i].box;
      nms_same = kept[i].rect == GridRect{b.top, b.left, b.bottom, b.right} &&
                 kept[i].anchor.row == ref_kept[i].anchor.row && kept[i].anchor.col == ref_kept[i].anchor.col;
    }
    nms_bad += !nms_same;
  }
  const bool ok = anchor_bad == 0 && expand_bad == 0 && nms_bad == 0 && mean_err <= 1e-9;
  return {ok, "500 maps: anchor mismatches " + std::to_string(anchor_bad) + ", expansion mismatches " +
                  std::to_string(expand_bad) + ", nms mismatches " + std::to_string(nms_bad) +
                  fmt(", max mean error %.1e", mean_err)};
}

// Standard suite: seeds 0..99, default scene options, 8 steps with overrun.
double suite_hit_rate(double noise, int seeds, const RunConfig& config) {
  synthetic::SceneOptions o;
  o.noise_level = noise;
  const auto runs = parallel_map<SuiteRun>(seeds, [&](int s) { return run_scene(static_cast<std::uint64_t>(s), o, config); });
  double hits = 0;
  for (const auto& r : runs) hits += r.hit;
  return hits / seeds;
}

Outcome end_to_end_noise0() {
  const double rate = suite_hit_rate(0.0, 100, config_of(8, true));
  return {rate == 1.0, "noise 0, 100 seeds: selected ROI covers >= 50% of the planted box in " + pct(rate) +
                           " (required 100%)"};
}

Outcome end_to_end_noise03() {
  const double rate = suite_hit_rate(0.3, 100, config_of(8, true));
  return {rate >= 0.9, "noise 0.3, 100 seeds: hit rate " + pct(rate) + " (required >= 90%)"};
}

Outcome budget_laws() {
  // Extra sweep: multi-target scenes, noisy oracle answers, every n_steps.
  synthetic::SceneOptions o;
  o.noise_level = 0.3;
  o.target_count = 2;
  o.max_distractors = 3;
  parallel_map<SuiteRun>(160, [&](int i) {
    return run_scene(static_cast<std::uint64_t>(1000 + i), o, config_of(1 + i % 8, i % 2 == 1), 0.2);
  });
  std::lock_guard lock(g_budget_mutex);
  std::string detail = std::to_string(g_budget_checked) + " runs checked, " +
                       std::to_string(g_budget_violations.size()) + " violations";
  if (!g_budget_violations.empty()) detail += " (first: " + g_budget_violations.front() + ")";
  return {g_budget_violations.empty() && g_budget_checked > 0, detail};
}

Outcome monotone_recall() {
  synthetic::SceneOptions o;
  o.noise_level = 0.3;
  std::vector<double> recalls;
  for (int steps : {1, 2, 4, 8}) {
    const RunConfig c = config_of(steps, false);
    const auto runs = parallel_map<SuiteRun>(100, [&](int s) { return run_scene(static_cast<std::uint64_t>(s), o, c); });
    double sum = 0;
    for (const auto& r : runs) sum += r.recall;
    recalls.push_back(sum / 100.0);
  }
  const bool ok = std::is_sorted(recalls.begin(), recalls.end());
  std::string detail = "mean recall at n_steps 1/2/4/8:";
  for (double r : recalls) detail += " " + fmt("%.3f", r);
  return {ok, detail};
}

Outcome efficiency_ratio() {
  std::ifstream in(std::string(FOCUS_TEST_DIR) + "/data/vstar_llava15.curves.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto curves = metrics::curves_from_json(ss.str());
  const auto e = metrics::efficiency(curves.at(0).points, curves.at(1).points);
  return {std::abs(e.ratio - 3.43) <= 0.05,
          fmt("ratio %.4f", e.ratio) + fmt(" (reference FP %.4f", e.fp_ref) + fmt(" / ours %.2f", e.fp_ours) +
              fmt(" at %.2f%% accuracy; target 3.43 +- 0.05)", 100.0 * e.reference_accuracy)};
}

Outcome ablation_ordering() {
  const double full = suite_hit_rate(0.3, 200, config_of(8, true));
  const double random_map = suite_hit_rate(0.3, 200, config_of(8, true, MapMode::random));
  const double no_rank = suite_hit_rate(0.3, 200, config_of(8, true, MapMode::relevance, false));
  const bool ok = full - random_map >= 0.05 && random_map - no_rank >= 0.05;
  return {ok, "200 seeds, noise 0.3: full " + pct(full) + " > random map " + pct(random_map) +
                  " > no ranking " + pct(no_rank) + " (gaps >= 5 pp)"};
}

Outcome format_round_trip() {
  int mismatched = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const io::Dump a = testing::random_dump(9000 + seed, {.with_keys = seed % 2 == 0});
    const auto bytes = io::write_dump(a.header(), a.tensors());
    const io::Dump b = io::read_dump(bytes);
    bool same = a.header() == b.header() && io::write_dump(b.header(), b.tensors()) == bytes;
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    same = same && ta.size() == tb.size();
    for (std::size_t i = 0; same && i < ta.size(); ++i)
      same = ta[i].name == tb[i].name && ta[i].tensor.shape == tb[i].tensor.shape &&
             std::memcmp(ta[i].tensor.values.data(), tb[i].tensor.values.data(),
                         ta[i].tensor.values.size() * sizeof(float)) == 0;
    mismatched += !same;
  }

  synthetic::SceneOptions o;
  o.grid_size = 4;
  o.first_layer = 0;
  o.last_layer = 1;
  const auto g = synthetic::generate_tensors(synthetic::make_scene(1, o));
  const auto good = io::write_dump(g.header, g.tensors);
  const int id = g.header.targets.front().target_id;
  const int w = g.header.image_size.width;
  using Edit = std::function<void(json&)>;
  const std::vector<Edit> edits = {
      [](json& j) { j["format_version"] = 99; },
      [](json& j) { j["hidden_dim"] = 0; },
      [](json& j) { j["crop_count_b"] = 2; },
      [](json& j) {
        j["view_kind"] = "global_local";
        j["crop_count_b"] = 1;
        j["local_dims"] = {{"h", 3}, {"w", 3}};
      },
      [](json& j) { j["layers"] = {1, 0}; },
      [](json& j) { j["targets"][0]["token_count"] = 0; },
      [id](json& j) { j["targets"].push_back({{"target_id", id}, {"surface_text", "x"}, {"token_count", 1}}); },
      [id, w](json& j) { j["question"]["gt_boxes"] = {{{"target_id", id}, {"rect", {0, 0, w + 1, 10}}}}; },
      [](json& j) { j["tensor_index"][1]["byte_offset"] = 1 << 30; },
      [](json& j) { j["tensor_index"][1]["byte_offset"] = j["tensor_index"][0]["byte_offset"]; },
      [](json& j) { j["tensor_index"][1]["byte_offset"] = j["tensor_index"][1]["byte_offset"].get<int>() + 4; },
      [](json& j) { j["tensor_index"][0]["byte_length"] = 4; },
      [](json& j) {
        const json shape = j["tensor_index"][0]["shape"];
        j["tensor_index"][0]["shape"] = {shape[1], shape[0]};
      },
      [](json& j) { j["tensor_index"][0]["name"] = "value/visual/7"; },
      [](json& j) { j.erase("layers"); },
  };
  std::set<io::DumpErrc> codes;
  int accepted = 0;
  const auto reject_code = [&](const std::vector<std::uint8_t>& bytes) {
    try {
      io::read_dump(bytes);
      ++accepted;
    } catch (const io::DumpError& e) {
      codes.insert(e.code());
    }
  };
  for (const auto& edit : edits) reject_code(testing::rewrite_header(good, edit));
  auto truncated = good;
  truncated.resize(truncated.size() - 8);
  reject_code(truncated);
  auto magic = good;
  magic[0] = 'X';
  reject_code(magic);
  const std::size_t cases = edits.size() + 2;
  const bool ok = mismatched == 0 && accepted == 0 && codes.size() == cases;
  return {ok, "100 dumps round-tripped, " + std::to_string(mismatched) + " mismatches; " + std::to_string(cases) +
                  " header violations -> " + std::to_string(codes.size()) + " distinct error codes, " +
                  std::to_string(accepted) + " accepted"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> allowed;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--allow-fail") == 0 && i + 1 < argc) {
      allowed.insert(argv[++i]);
    } else if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--allow-fail NAME]... [--jobs N]\n", argv[0]);
      return 2;
    }
  }
  log::set_level(log::Level::error);

  // budget_laws runs last among the synthetic criteria so it also audits
  // every earlier run.
  const std::vector<Criterion> criteria = {
      {"confidence_formula", confidence_formula},
      {"map_oracle_equivalence", map_oracle},
      {"proposal_oracle_equivalence", proposal_oracles},
      {"end_to_end_noise0", end_to_end_noise0},
      {"end_to_end_noise03", end_to_end_noise03},
      {"monotone_recall", monotone_recall},
      {"ablation_ordering", ablation_ordering},
      {"budget_laws", budget_laws},
      {"efficiency_ratio", efficiency_ratio},
      {"format_round_trip", format_round_trip},
  };
  int failed = 0, tolerated = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool excused = !o.pass && allowed.count(c.name) > 0;
    std::printf("%s  %-28s %s  [%.2f s]%s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs,
                excused ? "  (known failure, allowed)" : "");
    std::fflush(stdout);
    if (!o.pass) (excused ? tolerated : failed)++;
  }
  std::printf("%zu criteria: %zu passed, %d failed, %d known failure(s) allowed\n", criteria.size(),
              criteria.size() - static_cast<std::size_t>(failed + tolerated), failed, tolerated);
  return failed == 0 ? 0 : 1;
}
