#include "focus/relevance_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "focus/log.hpp"
#include "focus/pcg64.hpp"

namespace focus {

Grid::Grid(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("Grid: negative extent");
}

Grid::Grid(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0 || values_.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("Grid: value count does not match shape");
}

double Grid::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Grid::max() const { return *std::max_element(values_.begin(), values_.end()); }

void normalize_minmax(Grid& g) {
  if (g.empty()) return;
  const double lo = g.min();
  const double hi = g.max();
  const double range = hi - lo;
  for (double& v : g.values()) v = range > 0.0 ? (v - lo) / range : 0.5;
}

LayerMap pseudo_attention(std::span<const float> target_feature,
                          std::span<const float> visual_features, int rows, int cols) {
  const std::size_t d = target_feature.size();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (d == 0 || visual_features.size() != n * d)
    throw std::invalid_argument("pseudo_attention: expected " + std::to_string(n) + " x " +
                                std::to_string(d) + " visual features");

  double target_sq = 0.0;
  for (float x : target_feature) target_sq += double{x} * x;
  const double target_norm = std::sqrt(target_sq);

  LayerMap out;
  out.values = Grid(rows, cols);
  auto cells = out.values.values();
  for (std::size_t j = 0; j < n; ++j) {
    const float* v = visual_features.data() + j * d;
    double dot = 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dot += double{target_feature[k]} * v[k];
      sq += double{v[k]} * v[k];
    }
    const double denom = target_norm * std::sqrt(sq);
    if (denom == 0.0) {
      cells[j] = 0.0;
      ++out.degenerate_cells;
      continue;
    }
    cells[j] = std::clamp(dot / denom, -1.0, 1.0);
  }
  if (out.degenerate_cells > 0)
    log::warn("pseudo_attention: " + std::to_string(out.degenerate_cells) +
              " zero-norm vector(s), cosine set to 0");
  return out;
}

std::string_view to_string(RolloutResidual r) {
  return r == RolloutResidual::token_space ? "token_space" : "spatial_identity";
}

RolloutResidual parse_rollout_residual(std::string_view s) {
  if (s == "token_space") return RolloutResidual::token_space;
  if (s == "spatial_identity") return RolloutResidual::spatial_identity;
  throw std::invalid_argument("unknown rollout residual '" + std::string(s) + "'");
}

RelevanceMap rollout_aggregate(std::span<const LayerMap> per_layer_maps, RolloutResidual residual) {
  if (per_layer_maps.empty()) throw std::invalid_argument("rollout_aggregate: no layer maps");
  const Grid& first = per_layer_maps.front().values;
  const bool with_identity =
      residual == RolloutResidual::spatial_identity && first.rows() == first.cols();

  Grid sum(first.rows(), first.cols());
  for (const LayerMap& m : per_layer_maps) {
    if (!m.values.same_shape(first)) throw std::invalid_argument("rollout_aggregate: shape mismatch");
    for (int r = 0; r < sum.rows(); ++r) {
      for (int c = 0; c < sum.cols(); ++c) {
        const double identity = (with_identity && r == c) ? 1.0 : 0.0;
        sum(r, c) += (m.values(r, c) + identity) / 2.0;
      }
    }
    normalize_minmax(sum);
  }

  RelevanceMap out;
  out.values = std::move(sum);
  out.normalized = true;
  out.provenance.first_layer = per_layer_maps.front().layer_index;
  out.provenance.last_layer = per_layer_maps.back().layer_index;
  out.provenance.residual = residual;
  return out;
}

RelevanceMap consensus_multiply(std::span<const RelevanceMap> maps) {
  if (maps.empty()) throw std::invalid_argument("consensus_multiply: no maps");
  RelevanceMap out = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (!maps[i].values.same_shape(out.values))
      throw std::invalid_argument("consensus_multiply: shape mismatch");
    auto acc = out.values.values();
    auto rhs = maps[i].values.values();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] *= rhs[k];
    normalize_minmax(out.values);
  }
  if (maps.size() == 1) normalize_minmax(out.values);
  out.normalized = true;
  return out;
}

int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(4.0 * sigma + 0.5);
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

RelevanceMap smooth_and_downsample(const RelevanceMap& map, double sigma, int downsample_factor) {
  const Grid& in = map.values;
  if (sigma < 0.0) throw std::invalid_argument("smooth_and_downsample: sigma must be >= 0");
  if (downsample_factor < 1) throw std::invalid_argument("smooth_and_downsample: factor must be >= 1");
  if (downsample_factor > in.rows() || downsample_factor > in.cols())
    throw std::invalid_argument("smooth_and_downsample: factor " + std::to_string(downsample_factor) +
                                " exceeds map dimensions");

  Grid blurred = in;
  if (sigma > 0.0) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    Grid tmp(in.rows(), in.cols());
    for (int r = 0; r < in.rows(); ++r) {
      for (int c = 0; c < in.cols(); ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += taps[static_cast<std::size_t>(k + radius)] * in(r, reflect_index(c + k, in.cols()));
        tmp(r, c) = acc;
      }
    }
    for (int r = 0; r < in.rows(); ++r) {
      for (int c = 0; c < in.cols(); ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += taps[static_cast<std::size_t>(k + radius)] * tmp(reflect_index(r + k, in.rows()), c);
        blurred(r, c) = acc;
      }
    }
  }

  const int f = downsample_factor;
  const int out_rows = (in.rows() + f - 1) / f;
  const int out_cols = (in.cols() + f - 1) / f;
  Grid pooled(out_rows, out_cols);
  for (int r = 0; r < out_rows; ++r) {
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      int count = 0;
      for (int rr = r * f; rr < std::min((r + 1) * f, in.rows()); ++rr) {
        for (int cc = c * f; cc < std::min((c + 1) * f, in.cols()); ++cc) {
          acc += blurred(rr, cc);
          ++count;
        }
      }
      pooled(r, c) = acc / count;
    }
  }
  normalize_minmax(pooled);

  RelevanceMap out;
  out.values = std::move(pooled);
  out.normalized = true;
  out.provenance = map.provenance;
  out.provenance.sigma = sigma;
  out.provenance.downsample_factor = downsample_factor;
  out.provenance.smoothed = true;
  return out;
}

std::pair<int, int> map_grid_dims(const io::DumpHeader& header, const RelevanceConfig& config) {
  if (header.view_kind == io::ViewKind::global) return {header.grid_size, header.grid_size};
  const int f = std::max(1, config.downsample_factor);
  return {(header.local_rows + f - 1) / f, (header.local_cols + f - 1) / f};
}

RelevanceMap build_object_map(const io::Dump& dump, int target_id, const RelevanceConfig& config) {
  const io::DumpHeader& h = dump.header();
  const io::TargetMeta* target = h.find_target(target_id);
  if (target == nullptr)
    throw std::invalid_argument("build_object_map: target " + std::to_string(target_id) + " not in dump");
  const auto has_layer = [&](int l) {
    return std::find(h.layers.begin(), h.layers.end(), l) != h.layers.end();
  };
  if (config.first_layer > config.last_layer || !has_layer(config.first_layer) ||
      !has_layer(config.last_layer))
    throw std::invalid_argument("build_object_map: layer range " + std::to_string(config.first_layer) +
                                ":" + std::to_string(config.last_layer) + " not within dump layers");

  const bool local = h.view_kind == io::ViewKind::global_local;
  const int rows = local ? h.local_rows : h.grid_size;
  const int cols = local ? h.local_cols : h.grid_size;
  const std::int64_t offset = local ? std::int64_t{h.grid_size} * h.grid_size : 0;
  const std::size_t d = static_cast<std::size_t>(h.hidden_dim);
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;

  std::vector<std::vector<LayerMap>> per_token(static_cast<std::size_t>(target->token_count));
  for (int layer : h.layers) {
    if (layer < config.first_layer || layer > config.last_layer) continue;
    const io::Tensor visual = dump.tensor(io::visual_tensor_name(config.feature_kind, layer));
    const io::Tensor text =
        dump.tensor(io::target_tensor_name(config.feature_kind, target_id, layer));
    const std::span<const float> visual_span(visual.values.data() + offset * d, cells * d);
    for (int i = 0; i < target->token_count; ++i) {
      const std::span<const float> token(text.values.data() + static_cast<std::size_t>(i) * d, d);
      LayerMap m = pseudo_attention(token, visual_span, rows, cols);
      m.layer_index = layer;
      m.target_token_index = i;
      per_token[static_cast<std::size_t>(i)].push_back(std::move(m));
    }
  }

  std::vector<RelevanceMap> rolled;
  rolled.reserve(per_token.size());
  for (const auto& maps : per_token) rolled.push_back(rollout_aggregate(maps, config.residual));
  RelevanceMap out = consensus_multiply(rolled);
  out.provenance.first_layer = config.first_layer;
  out.provenance.last_layer = config.last_layer;
  out.provenance.feature_kind = config.feature_kind;
  out.provenance.residual = config.residual;
  out.provenance.target_ids = {target_id};
  if (local) out = smooth_and_downsample(out, config.sigma, config.downsample_factor);
  return out;
}

RelevanceMap random_relevance_map(int rows, int cols, std::uint64_t seed) {
  Pcg64 rng(seed, 0x6a09e667f3bcc909ULL);
  RelevanceMap out;
  out.values = Grid(rows, cols);
  for (double& v : out.values.values()) v = rng.uniform();
  normalize_minmax(out.values);
  out.normalized = true;
  return out;
}

std::vector<std::uint8_t> encode_pgm16(const Grid& map) {
  const std::string head =
      "P5\n" + std::to_string(map.cols()) + " " + std::to_string(map.rows()) + "\n65535\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(head.size() + map.size() * 2);
  for (double v : map.values()) {
    const auto s = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  return out;
}

std::string relevance_tensor_name(int target_id) { return "relevance_map/" + std::to_string(target_id); }

}  // namespace focus
