#pragma once

// Token-space test scenes. Feature construction, for target t and layer l
// (all draws from one Pcg64 stream seeded with the scene seed, in the order
// listed):
//   token features x_{t,i,l}   random unit vectors (i = 0..s)
//   target direction f_{t,l}   normalize(sum_i x_{t,i,l})
//   planted cell               normalize(f + noise_level * g), g ~ N(0, I_d)
//   distractor cell            normalize(0.5 f + 0.5 o), o a random unit
//                              vector orthogonalized against f
//   background cell            random unit vector
// A cell is planted/distractor when its pixel span intersects the box.
// Random unit vectors are normalized standard-normal draws.

#include <cstdint>
#include <string>
#include <vector>

#include "focus/geometry.hpp"
#include "focus/ranking.hpp"
#include "focus/tensor_io.hpp"

namespace focus::synthetic {

struct PlantedTarget {
  int target_id = 0;
  std::string surface_text;
  int token_count = 1;
  std::vector<PixelRect> boxes;
};

struct Distractor {
  int target_id = 0;
  PixelRect rect;
};

struct SyntheticScene {
  ImageSize image_size{1536, 1536};
  io::ViewKind view_kind = io::ViewKind::global;
  int grid_size = 24;   // a
  int crop_count = 0;   // b
  int local_rows = 0;   // h
  int local_cols = 0;   // w
  int hidden_dim = 64;
  std::vector<int> layers;
  std::vector<PlantedTarget> targets;
  std::vector<Distractor> distractors;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  io::QuestionType question_type = io::QuestionType::type1;
  bool emit_key_features = true;

  // Throws std::invalid_argument on boxes outside the image or bad geometry.
  void validate() const;
};

// Knobs for drawing a random scene.
struct SceneOptions {
  io::ViewKind view_kind = io::ViewKind::global;
  int grid_size = 24;
  int crop_count = 0;
  int cell_pixels = 64;
  int hidden_dim = 64;
  int first_layer = 14;
  int last_layer = 32;
  int target_count = 1;
  int tokens_per_target = 2;
  int min_box_cells = 2;
  int max_box_cells = 4;
  int max_distractors = 2;
  double noise_level = 0.0;
  io::QuestionType question_type = io::QuestionType::type1;
  int instances_per_target = 1;
};

// Deterministic scene with boxes aligned to the relevance grid cells;
// distractors never intersect planted boxes.
SyntheticScene make_scene(std::uint64_t seed, const SceneOptions& options = {});

struct GeneratedDump {
  io::DumpHeader header;
  std::vector<io::NamedTensor> tensors;
};

GeneratedDump generate_tensors(const SyntheticScene& scene);
io::Dump generate_dump(const SyntheticScene& scene);

std::string scene_to_json(const SyntheticScene& scene);
SyntheticScene scene_from_json(const std::string& text);

// l_yes = +4, l_no = 0 iff the rect covers >= 50% of a planted box of the
// queried target; otherwise the logits swap. flip_probability flips answers
// by a hash of (seed, rect, target), so repeated queries agree.
class GeometricOracle : public ExistenceOracle {
 public:
  explicit GeometricOracle(SyntheticScene scene, double flip_probability = 0.0);
  Logits query(const PixelRect& rect, const std::string& target_text) override;
  bool concurrent_safe() const override { return true; }

  // Ground truth without flips.
  bool covers_target(const PixelRect& rect, const std::string& target_text) const;

 private:
  SyntheticScene scene_;
  double flip_probability_;
};

}  // namespace focus::synthetic
