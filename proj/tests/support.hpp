#pragma once

// Shared fixtures for unit and acceptance tests.

#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "focus/pcg64.hpp"
#include "focus/ranking.hpp"
#include "focus/tensor_io.hpp"

namespace testing {

struct RandomDumpShape {
  int max_grid = 8;
  int max_layers = 3;
  int max_tokens = 3;
  int max_targets = 2;
  bool allow_local = true;
  bool with_keys = false;
};

// Random geometry and features; map grids stay within max_grid on each side.
inline focus::io::Dump random_dump(std::uint64_t seed, const RandomDumpShape& s = {}) {
  using namespace focus;
  Pcg64 rng(seed, 0xda3e39cb94b95bdbULL);
  io::DumpHeader h;
  h.model_id = "random";
  h.hidden_dim = rng.uniform_int(2, 12);
  const bool local = s.allow_local && rng.uniform() < 0.4;
  if (local) {
    // (a, b, h, w) with h * w = a^2 * b, both sides <= max_grid.
    struct Geo {
      int a, b, h, w;
    };
    static const Geo options[] = {{2, 4, 4, 4}, {2, 2, 2, 4}, {2, 2, 4, 2}, {2, 16, 8, 8},
                                  {3, 4, 6, 6}, {4, 4, 8, 8}, {2, 12, 6, 8}, {3, 1, 3, 3}};
    const Geo g = options[rng.uniform_int(0, 7)];
    h.view_kind = io::ViewKind::global_local;
    h.grid_size = g.a;
    h.crop_count = g.b;
    h.local_rows = g.h;
    h.local_cols = g.w;
  } else {
    h.view_kind = io::ViewKind::global;
    h.grid_size = rng.uniform_int(1, s.max_grid);
  }
  const int layer_count = rng.uniform_int(1, s.max_layers);
  int layer = rng.uniform_int(0, 4);
  for (int i = 0; i < layer_count; ++i) {
    h.layers.push_back(layer);
    layer += rng.uniform_int(1, 3);
  }
  h.image_size = {rng.uniform_int(16, 900), rng.uniform_int(16, 900)};
  const int targets = rng.uniform_int(1, s.max_targets);
  for (int t = 0; t < targets; ++t)
    h.targets.push_back({t * 3 + 1, "object " + std::to_string(t), rng.uniform_int(1, s.max_tokens)});
  h.question.question_text = "q";
  h.question.question_type = io::QuestionType::type1;

  const auto n = h.visual_token_count();
  std::vector<io::NamedTensor> tensors;
  std::vector<io::FeatureKind> kinds{io::FeatureKind::value};
  if (s.with_keys) kinds.push_back(io::FeatureKind::key_no_rope);
  for (auto kind : kinds)
    for (int l : h.layers) {
      io::Tensor v;
      v.shape = {n, h.hidden_dim};
      for (std::int64_t i = 0; i < n * h.hidden_dim; ++i) v.values.push_back(static_cast<float>(rng.normal()));
      tensors.push_back({io::visual_tensor_name(kind, l), std::move(v)});
      for (const auto& t : h.targets) {
        io::Tensor x;
        x.shape = {t.token_count, h.hidden_dim};
        for (int i = 0; i < t.token_count * h.hidden_dim; ++i) x.values.push_back(static_cast<float>(rng.normal()));
        tensors.push_back({io::target_tensor_name(kind, t.target_id, l), std::move(x)});
      }
    }
  return io::read_dump(io::write_dump(h, tensors));
}

// Re-encodes a container after editing its JSON header.
inline std::vector<std::uint8_t> rewrite_header(const std::vector<std::uint8_t>& bytes,
                                                const std::function<void(nlohmann::json&)>& edit) {
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 8, 4);
  nlohmann::json j = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  edit(j);
  const std::string text = j.dump();
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  const auto n = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), bytes.begin() + 12 + len, bytes.end());
  return out;
}

// Oracle answering from a fixed list in query order; records queries.
class ScriptedOracle : public focus::ExistenceOracle {
 public:
  explicit ScriptedOracle(std::vector<focus::Logits> answers) : answers_(std::move(answers)) {}
  focus::Logits query(const focus::PixelRect& rect, const std::string&) override {
    queries.push_back(rect);
    const std::size_t i = std::min(queries.size() - 1, answers_.size() - 1);
    return answers_[i];
  }
  std::vector<focus::PixelRect> queries;

 private:
  std::vector<focus::Logits> answers_;
};

// Answers by pixel rect through a callback.
class FunctionOracle : public focus::ExistenceOracle {
 public:
  explicit FunctionOracle(std::function<focus::Logits(const focus::PixelRect&)> fn) : fn_(std::move(fn)) {}
  focus::Logits query(const focus::PixelRect& rect, const std::string&) override {
    ++calls;
    return fn_(rect);
  }
  int calls = 0;

 private:
  std::function<focus::Logits(const focus::PixelRect&)> fn_;
};

}  // namespace testing
