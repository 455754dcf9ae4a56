#include "focus/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace focus::io {

using nlohmann::json;

namespace {

constexpr std::size_t kPrefixBytes = 8 + 4;

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::uint64_t align_up(std::uint64_t v) {
  return (v + kPayloadAlignment - 1) / kPayloadAlignment * kPayloadAlignment;
}

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

[[noreturn]] void fail(DumpErrc code, std::string field, const std::string& detail) {
  throw DumpError(code, std::move(field), detail);
}

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<DumpErrc> kErrcNames[] = {
    {DumpErrc::bad_magic, "bad magic"},
    {DumpErrc::truncated, "truncated payload"},
    {DumpErrc::malformed_header, "malformed header"},
    {DumpErrc::unsupported_version, "unsupported format version"},
    {DumpErrc::invalid_dimensions, "invalid dimensions"},
    {DumpErrc::global_with_crops, "global view with local crops"},
    {DumpErrc::local_dims_mismatch, "local dims mismatch"},
    {DumpErrc::layers_not_increasing, "layers not increasing"},
    {DumpErrc::bad_token_count, "bad target token count"},
    {DumpErrc::duplicate_target_id, "duplicate target id"},
    {DumpErrc::gt_box_outside_image, "gt box outside image"},
    {DumpErrc::tensor_out_of_bounds, "tensor out of bounds"},
    {DumpErrc::tensor_overlap, "tensor overlap"},
    {DumpErrc::tensor_misaligned, "tensor misaligned"},
    {DumpErrc::tensor_length_mismatch, "tensor length mismatch"},
    {DumpErrc::tensor_shape_mismatch, "tensor shape mismatch"},
    {DumpErrc::missing_tensor, "missing tensor"},
};

json rect_to_json(const PixelRect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

PixelRect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("rect must be [x0,y0,x1,y1]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json header_to_json(const DumpHeader& h, std::uint64_t payload_length) {
  json targets = json::array();
  for (const auto& t : h.targets) {
    targets.push_back(
        {{"target_id", t.target_id}, {"surface_text", t.surface_text}, {"token_count", t.token_count}});
  }
  json q = {{"question_text", h.question.question_text},
            {"question_type", to_string(h.question.question_type)},
            {"answer_options", h.question.answer_options},
            {"gt_answer", h.question.gt_answer ? json(*h.question.gt_answer) : json(nullptr)}};
  if (h.question.gt_boxes) {
    json boxes = json::array();
    for (const auto& b : *h.question.gt_boxes)
      boxes.push_back({{"target_id", b.target_id}, {"rect", rect_to_json(b.rect)}});
    q["gt_boxes"] = boxes;
  } else {
    q["gt_boxes"] = nullptr;
  }
  json index = json::array();
  for (const auto& e : h.tensor_index) {
    index.push_back({{"name", e.name},
                     {"shape", e.shape},
                     {"byte_offset", e.byte_offset},
                     {"byte_length", e.byte_length}});
  }
  return {{"format_version", h.format_version},
          {"model_id", h.model_id},
          {"view_kind", to_string(h.view_kind)},
          {"grid_size_a", h.grid_size},
          {"crop_count_b", h.crop_count},
          {"local_dims", {{"h", h.local_rows}, {"w", h.local_cols}}},
          {"hidden_dim", h.hidden_dim},
          {"layers", h.layers},
          {"feature_kind", to_string(h.feature_kind)},
          {"image_size", {{"width", h.image_size.width}, {"height", h.image_size.height}}},
          {"targets", targets},
          {"question", q},
          {"tensor_index", index},
          {"payload_length", payload_length}};
}

std::pair<DumpHeader, std::uint64_t> header_from_json(const json& j) {
  DumpHeader h;
  std::string field;
  try {
    field = "format_version";
    h.format_version = j.at(field).get<int>();
    field = "model_id";
    h.model_id = j.at(field).get<std::string>();
    field = "view_kind";
    h.view_kind = parse_view_kind(j.at(field).get<std::string>());
    field = "grid_size_a";
    h.grid_size = j.at(field).get<int>();
    field = "crop_count_b";
    h.crop_count = j.at(field).get<int>();
    field = "local_dims";
    h.local_rows = j.at(field).at("h").get<int>();
    h.local_cols = j.at(field).at("w").get<int>();
    field = "hidden_dim";
    h.hidden_dim = j.at(field).get<int>();
    field = "layers";
    h.layers = j.at(field).get<std::vector<int>>();
    field = "feature_kind";
    h.feature_kind = parse_feature_kind(j.at(field).get<std::string>());
    field = "image_size";
    h.image_size = {j.at(field).at("width").get<int>(), j.at(field).at("height").get<int>()};
    field = "targets";
    for (const auto& t : j.at(field)) {
      h.targets.push_back({t.at("target_id").get<int>(), t.at("surface_text").get<std::string>(),
                           t.at("token_count").get<int>()});
    }
    field = "question";
    const json& q = j.at(field);
    h.question.question_text = q.at("question_text").get<std::string>();
    h.question.question_type = parse_question_type(q.at("question_type").get<std::string>());
    h.question.answer_options = q.at("answer_options").get<std::vector<std::string>>();
    if (q.contains("gt_answer") && !q["gt_answer"].is_null())
      h.question.gt_answer = q["gt_answer"].get<std::string>();
    if (q.contains("gt_boxes") && !q["gt_boxes"].is_null()) {
      std::vector<GtBox> boxes;
      for (const auto& b : q["gt_boxes"])
        boxes.push_back({b.at("target_id").get<int>(), rect_from_json(b.at("rect"))});
      h.question.gt_boxes = std::move(boxes);
    }
    field = "tensor_index";
    for (const auto& e : j.at(field)) {
      h.tensor_index.push_back({e.at("name").get<std::string>(),
                                e.at("shape").get<std::vector<std::int64_t>>(),
                                e.at("byte_offset").get<std::uint64_t>(),
                                e.at("byte_length").get<std::uint64_t>()});
    }
    field = "payload_length";
    const auto payload_length = j.at(field).get<std::uint64_t>();
    return {std::move(h), payload_length};
  } catch (const json::exception& e) {
    fail(DumpErrc::malformed_header, field, e.what());
  } catch (const std::invalid_argument& e) {
    fail(DumpErrc::malformed_header, field, e.what());
  }
}

void check_feature_set(const DumpHeader& h, FeatureKind kind,
                       const std::map<std::string, const TensorEntry*, std::less<>>& by_name,
                       bool required) {
  if (!required) {
    const std::string prefix = std::string(tensor_prefix(kind)) + "/";
    const bool any = std::any_of(by_name.begin(), by_name.end(),
                                 [&](const auto& kv) { return kv.first.starts_with(prefix); });
    if (!any) return;
  }
  const std::int64_t tokens = h.visual_token_count();
  for (int layer : h.layers) {
    const std::string vname = visual_tensor_name(kind, layer);
    auto it = by_name.find(vname);
    if (it == by_name.end()) fail(DumpErrc::missing_tensor, "tensor_index", vname);
    const std::vector<std::int64_t> want{tokens, h.hidden_dim};
    if (it->second->shape != want)
      fail(DumpErrc::tensor_shape_mismatch, "tensor_index",
           vname + " expected (" + std::to_string(tokens) + ", " + std::to_string(h.hidden_dim) + ")");
    for (const auto& t : h.targets) {
      const std::string tname = target_tensor_name(kind, t.target_id, layer);
      auto tit = by_name.find(tname);
      if (tit == by_name.end()) fail(DumpErrc::missing_tensor, "tensor_index", tname);
      const std::vector<std::int64_t> twant{t.token_count, h.hidden_dim};
      if (tit->second->shape != twant)
        fail(DumpErrc::tensor_shape_mismatch, "tensor_index",
             tname + " expected (" + std::to_string(t.token_count) + ", " +
                 std::to_string(h.hidden_dim) + ")");
    }
  }
}

}  // namespace

std::string_view to_string(ViewKind v) { return v == ViewKind::global ? "global" : "global_local"; }
std::string_view to_string(FeatureKind f) {
  return f == FeatureKind::value ? "value" : "key_no_rope";
}
std::string_view to_string(QuestionType q) {
  switch (q) {
    case QuestionType::type1: return "type1";
    case QuestionType::type2: return "type2";
    default: return "unknown";
  }
}

ViewKind parse_view_kind(std::string_view s) {
  if (s == "global") return ViewKind::global;
  if (s == "global_local") return ViewKind::global_local;
  throw std::invalid_argument("unknown view_kind '" + std::string(s) + "'");
}

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "value") return FeatureKind::value;
  if (s == "key_no_rope" || s == "key") return FeatureKind::key_no_rope;
  throw std::invalid_argument("unknown feature_kind '" + std::string(s) + "'");
}

QuestionType parse_question_type(std::string_view s) {
  if (s == "type1") return QuestionType::type1;
  if (s == "type2") return QuestionType::type2;
  if (s == "unknown") return QuestionType::unknown;
  throw std::invalid_argument("unknown question_type '" + std::string(s) + "'");
}

std::string_view tensor_prefix(FeatureKind f) { return f == FeatureKind::value ? "value" : "key"; }

std::string visual_tensor_name(FeatureKind f, int layer) {
  return std::string(tensor_prefix(f)) + "/visual/" + std::to_string(layer);
}

std::string target_tensor_name(FeatureKind f, int target_id, int layer) {
  return std::string(tensor_prefix(f)) + "/target/" + std::to_string(target_id) + "/" +
         std::to_string(layer);
}

std::string_view to_string(DumpErrc code) {
  for (const auto& e : kErrcNames)
    if (e.value == code) return e.name;
  return "unknown error";
}

DumpError::DumpError(DumpErrc code, std::string field, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + " [" + field + "]" +
                         (detail.empty() ? "" : ": " + detail)),
      code_(code),
      field_(std::move(field)) {}

std::int64_t DumpHeader::visual_token_count() const {
  const std::int64_t a2 = std::int64_t{grid_size} * grid_size;
  return view_kind == ViewKind::global ? a2 : a2 * (crop_count + 1);
}

const TargetMeta* DumpHeader::find_target(int target_id) const {
  for (const auto& t : targets)
    if (t.target_id == target_id) return &t;
  return nullptr;
}

std::int64_t Tensor::numel() const { return shape_numel(shape); }

void validate_header(const DumpHeader& h, std::uint64_t payload_size) {
  if (h.format_version != kFormatVersion)
    fail(DumpErrc::unsupported_version, "format_version", std::to_string(h.format_version));
  if (h.grid_size <= 0) fail(DumpErrc::invalid_dimensions, "grid_size_a", "must be positive");
  if (h.hidden_dim <= 0) fail(DumpErrc::invalid_dimensions, "hidden_dim", "must be positive");
  if (h.crop_count < 0) fail(DumpErrc::invalid_dimensions, "crop_count_b", "must be >= 0");
  if (h.image_size.width <= 0 || h.image_size.height <= 0)
    fail(DumpErrc::invalid_dimensions, "image_size", "must be positive");

  if (h.view_kind == ViewKind::global && h.crop_count != 0)
    fail(DumpErrc::global_with_crops, "crop_count_b", "must be 0 for global view");
  if (h.view_kind == ViewKind::global_local) {
    const std::int64_t want = std::int64_t{h.grid_size} * h.grid_size * h.crop_count;
    if (h.crop_count < 1 || h.local_rows <= 0 || h.local_cols <= 0 ||
        std::int64_t{h.local_rows} * h.local_cols != want)
      fail(DumpErrc::local_dims_mismatch, "local_dims",
           "h*w must equal a^2*b = " + std::to_string(want));
  }
  for (std::size_t i = 1; i < h.layers.size(); ++i)
    if (h.layers[i] <= h.layers[i - 1])
      fail(DumpErrc::layers_not_increasing, "layers", "layers not increasing");

  std::set<int> ids;
  for (const auto& t : h.targets) {
    if (t.token_count < 1)
      fail(DumpErrc::bad_token_count, "targets", "target " + std::to_string(t.target_id));
    if (!ids.insert(t.target_id).second)
      fail(DumpErrc::duplicate_target_id, "targets", std::to_string(t.target_id));
  }
  if (h.question.gt_boxes) {
    for (const auto& b : *h.question.gt_boxes) {
      const auto& r = b.rect;
      if (r.x0 < 0 || r.y0 < 0 || r.x1 > h.image_size.width || r.y1 > h.image_size.height ||
          r.x0 >= r.x1 || r.y0 >= r.y1)
        fail(DumpErrc::gt_box_outside_image, "question.gt_boxes",
             "target " + std::to_string(b.target_id));
    }
  }

  std::map<std::string, const TensorEntry*, std::less<>> by_name;
  std::vector<const TensorEntry*> ordered;
  for (const auto& e : h.tensor_index) {
    for (auto s : e.shape)
      if (s < 0) fail(DumpErrc::tensor_shape_mismatch, "tensor_index", e.name + " negative extent");
    if (e.byte_length != static_cast<std::uint64_t>(shape_numel(e.shape)) * sizeof(float))
      fail(DumpErrc::tensor_length_mismatch, "tensor_index", e.name);
    if (e.byte_offset % kPayloadAlignment != 0)
      fail(DumpErrc::tensor_misaligned, "tensor_index", e.name);
    if (e.byte_offset > payload_size || e.byte_length > payload_size - e.byte_offset)
      fail(DumpErrc::tensor_out_of_bounds, "tensor_index", e.name);
    if (!by_name.emplace(e.name, &e).second)
      fail(DumpErrc::tensor_overlap, "tensor_index", "duplicate name " + e.name);
    ordered.push_back(&e);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](auto* a, auto* b) { return a->byte_offset < b->byte_offset; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    const auto* prev = ordered[i - 1];
    if (prev->byte_length > 0 && ordered[i]->byte_length > 0 &&
        prev->byte_offset + prev->byte_length > ordered[i]->byte_offset)
      fail(DumpErrc::tensor_overlap, "tensor_index", prev->name + " / " + ordered[i]->name);
  }

  check_feature_set(h, h.feature_kind, by_name, true);
  const FeatureKind other =
      h.feature_kind == FeatureKind::value ? FeatureKind::key_no_rope : FeatureKind::value;
  check_feature_set(h, other, by_name, false);
}

Dump::Dump(DumpHeader header, std::vector<std::uint8_t> payload)
    : header_(std::move(header)), payload_(std::move(payload)) {}

bool Dump::has_tensor(std::string_view name) const {
  return std::any_of(header_.tensor_index.begin(), header_.tensor_index.end(),
                     [&](const TensorEntry& e) { return e.name == name; });
}

const TensorEntry& Dump::entry(std::string_view name) const {
  for (const auto& e : header_.tensor_index)
    if (e.name == name) return e;
  throw DumpError(DumpErrc::missing_tensor, "tensor_index", std::string(name));
}

Tensor Dump::tensor(std::string_view name) const {
  const TensorEntry& e = entry(name);
  Tensor t;
  t.shape = e.shape;
  t.values.resize(static_cast<std::size_t>(shape_numel(e.shape)));
  const std::uint8_t* src = payload_.data() + e.byte_offset;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, src + 4 * i, 4);
    t.values[i] = std::bit_cast<float>(to_le(bits));
  }
  return t;
}

std::vector<NamedTensor> Dump::tensors() const {
  std::vector<NamedTensor> out;
  out.reserve(header_.tensor_index.size());
  for (const auto& e : header_.tensor_index) out.push_back({e.name, tensor(e.name)});
  return out;
}

void Dump::read_row(const TensorEntry& e, std::int64_t row, std::span<float> out) const {
  if (e.shape.size() != 2 || row < 0 || row >= e.shape[0] ||
      out.size() != static_cast<std::size_t>(e.shape[1]))
    throw std::out_of_range("read_row: bad row access on " + e.name);
  const std::uint8_t* src = payload_.data() + e.byte_offset + 4 * row * e.shape[1];
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, src + 4 * i, 4);
    out[i] = std::bit_cast<float>(to_le(bits));
  }
}

std::vector<std::uint8_t> write_dump(const DumpHeader& header,
                                     const std::vector<NamedTensor>& tensors) {
  DumpHeader h = header;
  for (const auto& nt : tensors)
    if (static_cast<std::size_t>(nt.tensor.numel()) != nt.tensor.values.size())
      fail(DumpErrc::tensor_shape_mismatch, "tensors", nt.name + " shape disagrees with data");

  if (h.tensor_index.empty()) {
    std::uint64_t offset = 0;
    for (const auto& nt : tensors) {
      const std::uint64_t len = nt.tensor.values.size() * sizeof(float);
      h.tensor_index.push_back({nt.name, nt.tensor.shape, offset, len});
      offset = align_up(offset + len);
    }
  } else {
    if (h.tensor_index.size() != tensors.size())
      fail(DumpErrc::tensor_shape_mismatch, "tensor_index", "index/tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& e = h.tensor_index[i];
      if (e.name != tensors[i].name || e.shape != tensors[i].tensor.shape)
        fail(DumpErrc::tensor_shape_mismatch, "tensor_index", e.name);
    }
  }

  std::uint64_t payload_length = 0;
  for (const auto& e : h.tensor_index)
    payload_length = std::max<std::uint64_t>(payload_length, align_up(e.byte_offset + e.byte_length));
  validate_header(h, payload_length);

  const std::string text = header_to_json(h, payload_length).dump();
  std::vector<std::uint8_t> out(kPrefixBytes + text.size() + payload_length, 0);
  std::memcpy(out.data(), kMagic.data(), kMagic.size());
  const std::uint32_t len = to_le(static_cast<std::uint32_t>(text.size()));
  std::memcpy(out.data() + 8, &len, 4);
  std::memcpy(out.data() + kPrefixBytes, text.data(), text.size());
  std::uint8_t* payload = out.data() + kPrefixBytes + text.size();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::uint8_t* dst = payload + h.tensor_index[i].byte_offset;
    for (std::size_t k = 0; k < tensors[i].tensor.values.size(); ++k) {
      const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(tensors[i].tensor.values[k]));
      std::memcpy(dst + 4 * k, &bits, 4);
    }
  }
  return out;
}

Dump read_dump(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_avail = std::min(bytes.size(), kMagic.size());
  if (std::memcmp(bytes.data(), kMagic.data(), magic_avail) != 0 || bytes.empty())
    fail(DumpErrc::bad_magic, "magic", "");
  if (bytes.size() < kPrefixBytes) fail(DumpErrc::truncated, "header_length", "file too short");
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 8, 4);
  len = to_le(len);
  if (bytes.size() - kPrefixBytes < len) fail(DumpErrc::truncated, "header", "header cut short");

  json j;
  try {
    j = json::parse(bytes.begin() + kPrefixBytes, bytes.begin() + kPrefixBytes + len);
  } catch (const json::exception& e) {
    fail(DumpErrc::malformed_header, "header", e.what());
  }
  if (!j.is_object()) fail(DumpErrc::malformed_header, "header", "not a JSON object");
  auto [header, payload_length] = header_from_json(j);

  const auto payload = bytes.subspan(kPrefixBytes + len);
  if (payload.size() < payload_length)
    fail(DumpErrc::truncated, "payload",
         std::to_string(payload.size()) + " of " + std::to_string(payload_length) + " bytes");
  validate_header(header, payload_length);
  return Dump(std::move(header),
              std::vector<std::uint8_t>(payload.begin(), payload.begin() + payload_length));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_file_atomic(const std::string& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dump load_dump(const std::string& path) { return read_dump(read_file(path)); }

void save_dump(const std::string& path, const DumpHeader& header,
               const std::vector<NamedTensor>& tensors) {
  write_file_atomic(path, write_dump(header, tensors));
}

}  // namespace focus::io
