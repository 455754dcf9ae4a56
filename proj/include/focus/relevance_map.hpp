#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "focus/tensor_io.hpp"

namespace focus {

// Dense row-major float64 grid.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, double fill = 0.0);
  Grid(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double min() const;
  double max() const;
  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// Min-max rescale to [0, 1]. A constant grid becomes all 0.5.
void normalize_minmax(Grid& g);

// Cosine pseudo-attention of one target token against the visual tokens of
// one layer.
struct LayerMap {
  Grid values;
  int layer_index = 0;
  int target_token_index = 0;
  // Cells whose cosine was defined as 0 because a vector had zero norm.
  int degenerate_cells = 0;
};

// Residual term of the rollout. token_space: the identity lives on the full
// token x token matrix, whose text-to-visual slice is zero, so only A / 2 is
// accumulated. spatial_identity: adds I to the reshaped map itself (square
// maps only; dropped for non-square maps).
enum class RolloutResidual { token_space, spatial_identity };

std::string_view to_string(RolloutResidual r);
RolloutResidual parse_rollout_residual(std::string_view s);

struct RelevanceProvenance {
  int first_layer = 0;
  int last_layer = 0;
  io::FeatureKind feature_kind = io::FeatureKind::value;
  RolloutResidual residual = RolloutResidual::token_space;
  std::vector<int> target_ids;
  double sigma = 0.0;
  int downsample_factor = 1;
  bool smoothed = false;
};

struct RelevanceMap {
  Grid values;
  bool normalized = false;
  RelevanceProvenance provenance;
};

struct RelevanceConfig {
  int first_layer = 14;
  int last_layer = 32;
  io::FeatureKind feature_kind = io::FeatureKind::value;
  RolloutResidual residual = RolloutResidual::token_space;
  double sigma = 1.0;
  int downsample_factor = 2;
};

// visual_features is n x d row-major with n = rows * cols.
LayerMap pseudo_attention(std::span<const float> target_feature,
                          std::span<const float> visual_features, int rows, int cols);

// Running sum of (A + I) / 2 over the layers, normalized after every
// addition. See RolloutResidual for what I is.
RelevanceMap rollout_aggregate(std::span<const LayerMap> per_layer_maps,
                               RolloutResidual residual = RolloutResidual::token_space);

// Element-wise product across target tokens, normalized after every product.
RelevanceMap consensus_multiply(std::span<const RelevanceMap> maps);

// Separable Gaussian blur (reflect padding, radius round(4 sigma)), block-mean
// downsampling, then renormalization. sigma == 0 skips the blur.
RelevanceMap smooth_and_downsample(const RelevanceMap& map, double sigma, int downsample_factor);

// Normalized 1-D Gaussian taps for radius round(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Index into [0, n) with half-sample symmetric reflection (d c b a | a b c d).
int reflect_index(int i, int n);

// Binary PGM (P5), 16-bit big-endian samples, value * 65535 rounded.
std::vector<std::uint8_t> encode_pgm16(const Grid& map);
// Tensor name for a stored map: relevance_map/<target_id>, shape (rows, cols).
std::string relevance_tensor_name(int target_id);

RelevanceMap build_object_map(const io::Dump& dump, int target_id, const RelevanceConfig& config);

// Uniform random map used by the "no relevance map" ablation.
RelevanceMap random_relevance_map(int rows, int cols, std::uint64_t seed);

// Grid shape of the map produced by build_object_map for this dump.
std::pair<int, int> map_grid_dims(const io::DumpHeader& header, const RelevanceConfig& config);

}  // namespace focus
