#include "focus/synthetic.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "focus/metrics.hpp"
#include "focus/pcg64.hpp"
#include "focus/roi_proposal.hpp"

namespace focus::synthetic {

using nlohmann::json;

namespace {

constexpr const char* kTargetNames[] = {"red car", "umbrella", "dog", "bench", "traffic light", "bicycle"};

using Vec = std::vector<double>;

Vec random_unit(Pcg64& rng, int d) {
  Vec v(static_cast<std::size_t>(d));
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq == 0.0);
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

void normalize(Vec& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

void append(std::vector<float>& out, const Vec& v) {
  for (double x : v) out.push_back(static_cast<float>(x));
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json rect_json(const PixelRect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

PixelRect rect_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 4) throw std::invalid_argument("rect must be [x0,y0,x1,y1]");
  return {v[0], v[1], v[2], v[3]};
}

bool inside(const PixelRect& r, ImageSize img) {
  return r.x0 >= 0 && r.y0 >= 0 && r.x1 <= img.width && r.y1 <= img.height && r.area() > 0;
}

}  // namespace

void SyntheticScene::validate() const {
  if (image_size.width <= 0 || image_size.height <= 0) throw std::invalid_argument("scene: empty image");
  if (grid_size <= 0 || hidden_dim <= 0 || layers.empty()) throw std::invalid_argument("scene: bad geometry");
  if (view_kind == io::ViewKind::global_local &&
      std::int64_t{local_rows} * local_cols != std::int64_t{grid_size} * grid_size * crop_count)
    throw std::invalid_argument("scene: local dims must satisfy h*w = a^2*b");
  for (const auto& t : targets)
    for (const auto& b : t.boxes)
      if (!inside(b, image_size)) throw std::invalid_argument("scene: planted box outside image");
  for (const auto& d : distractors)
    if (!inside(d.rect, image_size)) throw std::invalid_argument("scene: distractor outside image");
}

SyntheticScene make_scene(std::uint64_t seed, const SceneOptions& o) {
  SyntheticScene s;
  s.seed = seed;
  s.view_kind = o.view_kind;
  s.grid_size = o.grid_size;
  s.crop_count = o.view_kind == io::ViewKind::global ? 0 : o.crop_count;
  s.hidden_dim = o.hidden_dim;
  s.noise_level = o.noise_level;
  s.question_type = o.question_type;
  for (int l = o.first_layer; l <= o.last_layer; ++l) s.layers.push_back(l);

  // Boxes snap to the cells of the a x a grid, which is also the relevance
  // grid for global_local scenes with b = 4 and downsample factor 2.
  const int cells = o.grid_size;
  s.image_size = {cells * o.cell_pixels, cells * o.cell_pixels};
  if (s.view_kind == io::ViewKind::global_local) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(o.crop_count))));
    if (side * side != o.crop_count) throw std::invalid_argument("make_scene: crop_count must be a square");
    s.local_rows = s.local_cols = o.grid_size * side;
  }

  Pcg64 rng(seed, 0x5851f42d4c957f2dULL);
  const auto draw_box = [&] {
    const int h = rng.uniform_int(o.min_box_cells, o.max_box_cells);
    const int w = rng.uniform_int(o.min_box_cells, o.max_box_cells);
    const int top = rng.uniform_int(0, cells - h);
    const int left = rng.uniform_int(0, cells - w);
    return PixelRect{left * o.cell_pixels, top * o.cell_pixels, (left + w) * o.cell_pixels,
                     (top + h) * o.cell_pixels};
  };
  std::vector<PixelRect> occupied;
  const auto clear_of = [&](const PixelRect& r) {
    for (const auto& q : occupied)
      if (intersect(r, q).area() > 0) return false;
    return true;
  };

  for (int t = 0; t < o.target_count; ++t) {
    PlantedTarget target;
    target.target_id = t;
    target.surface_text = kTargetNames[t % std::size(kTargetNames)];
    target.token_count = o.tokens_per_target;
    for (int k = 0; k < o.instances_per_target; ++k) {
      PixelRect box = draw_box();
      for (int attempt = 0; attempt < 200 && !clear_of(box); ++attempt) box = draw_box();
      occupied.push_back(box);
      target.boxes.push_back(box);
    }
    s.targets.push_back(std::move(target));
  }
  const int distractors = rng.uniform_int(0, o.max_distractors);
  for (int k = 0; k < distractors; ++k) {
    PixelRect box = draw_box();
    int attempt = 0;
    for (; attempt < 200 && !clear_of(box); ++attempt) box = draw_box();
    if (!clear_of(box)) continue;
    occupied.push_back(box);
    s.distractors.push_back({rng.uniform_int(0, o.target_count - 1), box});
  }
  return s;
}

GeneratedDump generate_tensors(const SyntheticScene& scene) {
  scene.validate();
  GeneratedDump out;
  io::DumpHeader& h = out.header;
  h.model_id = "synthetic";
  h.view_kind = scene.view_kind;
  h.grid_size = scene.grid_size;
  h.crop_count = scene.crop_count;
  h.local_rows = scene.local_rows;
  h.local_cols = scene.local_cols;
  h.hidden_dim = scene.hidden_dim;
  h.layers = scene.layers;
  h.feature_kind = io::FeatureKind::value;
  h.image_size = scene.image_size;
  std::vector<io::GtBox> gt;
  std::string names;
  for (const auto& t : scene.targets) {
    h.targets.push_back({t.target_id, t.surface_text, t.token_count});
    for (const auto& b : t.boxes) gt.push_back({t.target_id, b});
    names += (names.empty() ? "" : ", ") + t.surface_text;
  }
  h.question.question_text = "Is there a " + names + " in the image?";
  h.question.question_type = scene.question_type;
  if (scene.question_type == io::QuestionType::type2) {
    h.question.question_text = "How many " + names + " are there in the image?";
    h.question.gt_answer = std::to_string(gt.size());
  } else {
    h.question.gt_answer = "yes";
  }
  h.question.gt_boxes = std::move(gt);

  const int d = scene.hidden_dim;
  const auto cell_kind = [&](const PixelRect& span) -> std::pair<int, int> {
    // {0 background | 1 planted | 2 distractor, target index}
    for (std::size_t t = 0; t < scene.targets.size(); ++t)
      for (const auto& b : scene.targets[t].boxes)
        if (intersect(span, b).area() > 0) return {1, static_cast<int>(t)};
    for (const auto& dis : scene.distractors) {
      if (intersect(span, dis.rect).area() == 0) continue;
      for (std::size_t t = 0; t < scene.targets.size(); ++t)
        if (scene.targets[t].target_id == dis.target_id) return {2, static_cast<int>(t)};
    }
    return {0, -1};
  };

  // Precompute the cell classification for the global and local grids.
  std::vector<std::pair<int, int>> kinds;
  const auto classify = [&](int rows, int cols) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        kinds.push_back(cell_kind(grid_to_pixels({r, c, r, c}, rows, cols, scene.image_size)));
  };
  classify(scene.grid_size, scene.grid_size);
  if (scene.view_kind == io::ViewKind::global_local) classify(scene.local_rows, scene.local_cols);

  Pcg64 rng(scene.seed, 0x14057b7ef767814fULL);
  std::vector<io::FeatureKind> feature_kinds{io::FeatureKind::value};
  if (scene.emit_key_features) feature_kinds.push_back(io::FeatureKind::key_no_rope);
  for (io::FeatureKind kind : feature_kinds) {
    for (int layer : scene.layers) {
      std::vector<Vec> directions;
      std::vector<io::NamedTensor> text_tensors;
      for (const auto& t : scene.targets) {
        io::Tensor tokens;
        tokens.shape = {t.token_count, d};
        Vec dir(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < t.token_count; ++i) {
          const Vec x = random_unit(rng, d);
          append(tokens.values, x);
          for (int k = 0; k < d; ++k) dir[static_cast<std::size_t>(k)] += x[static_cast<std::size_t>(k)];
        }
        normalize(dir);
        directions.push_back(std::move(dir));
        text_tensors.push_back({io::target_tensor_name(kind, t.target_id, layer), std::move(tokens)});
      }

      io::Tensor visual;
      visual.shape = {static_cast<std::int64_t>(kinds.size()), d};
      visual.values.reserve(kinds.size() * static_cast<std::size_t>(d));
      for (const auto& [cls, t] : kinds) {
        if (cls == 1) {
          Vec v = directions[static_cast<std::size_t>(t)];
          for (double& x : v) x += scene.noise_level * rng.normal();
          normalize(v);
          append(visual.values, v);
        } else if (cls == 2) {
          const Vec& f = directions[static_cast<std::size_t>(t)];
          Vec o = random_unit(rng, d);
          const double proj = dot(o, f);
          for (int k = 0; k < d; ++k) o[static_cast<std::size_t>(k)] -= proj * f[static_cast<std::size_t>(k)];
          normalize(o);
          Vec v(static_cast<std::size_t>(d));
          for (int k = 0; k < d; ++k)
            v[static_cast<std::size_t>(k)] = 0.5 * f[static_cast<std::size_t>(k)] + 0.5 * o[static_cast<std::size_t>(k)];
          normalize(v);
          append(visual.values, v);
        } else {
          append(visual.values, random_unit(rng, d));
        }
      }
      out.tensors.push_back({io::visual_tensor_name(kind, layer), std::move(visual)});
      for (auto& tt : text_tensors) out.tensors.push_back(std::move(tt));
    }
  }
  return out;
}

io::Dump generate_dump(const SyntheticScene& scene) {
  const GeneratedDump g = generate_tensors(scene);
  return io::read_dump(io::write_dump(g.header, g.tensors));
}

std::string scene_to_json(const SyntheticScene& s) {
  json targets = json::array();
  for (const auto& t : s.targets) {
    json boxes = json::array();
    for (const auto& b : t.boxes) boxes.push_back(rect_json(b));
    targets.push_back({{"target_id", t.target_id},
                       {"surface_text", t.surface_text},
                       {"token_count", t.token_count},
                       {"boxes", boxes}});
  }
  json distractors = json::array();
  for (const auto& d : s.distractors) distractors.push_back({{"target_id", d.target_id}, {"rect", rect_json(d.rect)}});
  return json{{"image_size", {s.image_size.width, s.image_size.height}},
              {"view_kind", io::to_string(s.view_kind)},
              {"grid_size_a", s.grid_size},
              {"crop_count_b", s.crop_count},
              {"local_dims", {s.local_rows, s.local_cols}},
              {"hidden_dim", s.hidden_dim},
              {"layers", s.layers},
              {"targets", targets},
              {"distractors", distractors},
              {"noise_level", s.noise_level},
              {"seed", s.seed},
              {"question_type", io::to_string(s.question_type)},
              {"emit_key_features", s.emit_key_features}}
      .dump(2);
}

SyntheticScene scene_from_json(const std::string& text) {
  const json j = json::parse(text);
  SyntheticScene s;
  const auto img = j.at("image_size").get<std::vector<int>>();
  if (img.size() != 2) throw std::invalid_argument("image_size must be [w, h]");
  s.image_size = {img[0], img[1]};
  s.view_kind = io::parse_view_kind(j.at("view_kind").get<std::string>());
  s.grid_size = j.at("grid_size_a").get<int>();
  s.crop_count = j.at("crop_count_b").get<int>();
  const auto local = j.at("local_dims").get<std::vector<int>>();
  if (local.size() != 2) throw std::invalid_argument("local_dims must be [h, w]");
  s.local_rows = local[0];
  s.local_cols = local[1];
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.layers = j.at("layers").get<std::vector<int>>();
  for (const auto& t : j.at("targets")) {
    PlantedTarget pt;
    pt.target_id = t.at("target_id").get<int>();
    pt.surface_text = t.at("surface_text").get<std::string>();
    pt.token_count = t.at("token_count").get<int>();
    for (const auto& b : t.at("boxes")) pt.boxes.push_back(rect_from(b));
    s.targets.push_back(std::move(pt));
  }
  for (const auto& d : j.at("distractors")) s.distractors.push_back({d.at("target_id").get<int>(), rect_from(d.at("rect"))});
  s.noise_level = j.at("noise_level").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.question_type = io::parse_question_type(j.value("question_type", std::string("type1")));
  s.emit_key_features = j.value("emit_key_features", true);
  s.validate();
  return s;
}

GeometricOracle::GeometricOracle(SyntheticScene scene, double flip_probability)
    : scene_(std::move(scene)), flip_probability_(flip_probability) {}

bool GeometricOracle::covers_target(const PixelRect& rect, const std::string& target_text) const {
  for (const auto& t : scene_.targets) {
    if (t.surface_text != target_text) continue;
    for (const auto& b : t.boxes)
      if (metrics::overlaps_half(rect, b)) return true;
  }
  return false;
}

Logits GeometricOracle::query(const PixelRect& rect, const std::string& target_text) {
  bool yes = covers_target(rect, target_text);
  if (flip_probability_ > 0.0) {
    std::uint64_t h = splitmix(scene_.seed);
    for (int v : {rect.x0, rect.y0, rect.x1, rect.y1}) h = splitmix(h ^ static_cast<std::uint32_t>(v));
    h = splitmix(h ^ std::hash<std::string>{}(target_text));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < flip_probability_) yes = !yes;
  }
  return yes ? Logits{4.0, 0.0} : Logits{0.0, 4.0};
}

}  // namespace focus::synthetic
