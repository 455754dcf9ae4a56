#pragma once

// .fkv token-feature container.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "FOCUSKV1"
//   bytes 8..11   u32 header length N
//   bytes 12..    N bytes of UTF-8 JSON header
//   payload       float32 tensors; each offset (relative to payload start)
//                 is a multiple of 64, gaps are zero-filled
//
// Tensor naming:
//   <kind>/visual/<layer>          (tokens, hidden_dim)
//   <kind>/target/<id>/<layer>     (token_count, hidden_dim)
// where <kind> is "value" or "key". The set named by the header's
// feature_kind must be complete; the other set is optional but, when present,
// is validated the same way. Other names (e.g. relevance_map/<id>) are
// carried through without shape checks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "focus/geometry.hpp"

namespace focus::io {

inline constexpr std::string_view kMagic = "FOCUSKV1";
inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kPayloadAlignment = 64;

enum class ViewKind { global, global_local };
enum class FeatureKind { value, key_no_rope };
enum class QuestionType { type1, type2, unknown };

std::string_view to_string(ViewKind v);
std::string_view to_string(FeatureKind f);
std::string_view to_string(QuestionType q);
ViewKind parse_view_kind(std::string_view s);
FeatureKind parse_feature_kind(std::string_view s);
QuestionType parse_question_type(std::string_view s);

// Tensor-name prefix for a feature kind ("value" / "key").
std::string_view tensor_prefix(FeatureKind f);
std::string visual_tensor_name(FeatureKind f, int layer);
std::string target_tensor_name(FeatureKind f, int target_id, int layer);

struct TargetMeta {
  int target_id = 0;
  std::string surface_text;
  int token_count = 1;  // s + 1
  friend bool operator==(const TargetMeta&, const TargetMeta&) = default;
};

struct GtBox {
  int target_id = 0;
  PixelRect rect;
  friend bool operator==(const GtBox&, const GtBox&) = default;
};

struct QuestionMeta {
  std::string question_text;
  QuestionType question_type = QuestionType::unknown;
  std::vector<std::string> answer_options;
  std::optional<std::string> gt_answer;
  std::optional<std::vector<GtBox>> gt_boxes;
  friend bool operator==(const QuestionMeta&, const QuestionMeta&) = default;
};

struct TensorEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::uint64_t byte_offset = 0;
  std::uint64_t byte_length = 0;
  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

struct DumpHeader {
  int format_version = kFormatVersion;
  std::string model_id;
  ViewKind view_kind = ViewKind::global;
  int grid_size = 0;     // a
  int crop_count = 0;    // b
  int local_rows = 0;    // h
  int local_cols = 0;    // w
  int hidden_dim = 0;
  std::vector<int> layers;
  FeatureKind feature_kind = FeatureKind::value;
  ImageSize image_size;
  std::vector<TargetMeta> targets;
  QuestionMeta question;
  std::vector<TensorEntry> tensor_index;

  // a^2 for global, a^2 * (b + 1) for global_local.
  std::int64_t visual_token_count() const;
  const TargetMeta* find_target(int target_id) const;

  friend bool operator==(const DumpHeader&, const DumpHeader&) = default;
};

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t numel() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Every rejection carries one of these codes plus the offending field name.
enum class DumpErrc {
  bad_magic,
  truncated,
  malformed_header,
  unsupported_version,
  invalid_dimensions,
  global_with_crops,
  local_dims_mismatch,
  layers_not_increasing,
  bad_token_count,
  duplicate_target_id,
  gt_box_outside_image,
  tensor_out_of_bounds,
  tensor_overlap,
  tensor_misaligned,
  tensor_length_mismatch,
  tensor_shape_mismatch,
  missing_tensor,
};

std::string_view to_string(DumpErrc code);

class DumpError : public std::runtime_error {
 public:
  DumpError(DumpErrc code, std::string field, const std::string& detail);
  DumpErrc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  DumpErrc code_;
  std::string field_;
};

// Parsed dump. Owns the file bytes; tensors are decoded on access.
class Dump {
 public:
  Dump() = default;
  Dump(DumpHeader header, std::vector<std::uint8_t> payload);

  const DumpHeader& header() const { return header_; }
  bool has_tensor(std::string_view name) const;
  const TensorEntry& entry(std::string_view name) const;
  Tensor tensor(std::string_view name) const;
  std::vector<NamedTensor> tensors() const;

  // Copies one row of a 2-D tensor into `out` (must hold shape[1] floats).
  void read_row(const TensorEntry& e, std::int64_t row, std::span<float> out) const;

 private:
  DumpHeader header_;
  std::vector<std::uint8_t> payload_;
};

// Checks all header invariants against a payload of `payload_size` bytes.
void validate_header(const DumpHeader& header, std::uint64_t payload_size);

// If header.tensor_index is empty it is laid out from `tensors` in order;
// otherwise the supplied index must agree with `tensors` by name and shape.
std::vector<std::uint8_t> write_dump(const DumpHeader& header,
                                     const std::vector<NamedTensor>& tensors);
Dump read_dump(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, std::string_view text);

Dump load_dump(const std::string& path);
void save_dump(const std::string& path, const DumpHeader& header,
               const std::vector<NamedTensor>& tensors);

}  // namespace focus::io
