#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "focus/synthetic.hpp"
#include "focus/tensor_io.hpp"
#include "support.hpp"

using namespace focus;
using namespace focus::io;
using nlohmann::json;
using testing::rewrite_header;

namespace {

DumpHeader small_header() {
  DumpHeader h;
  h.model_id = "unit";
  h.view_kind = ViewKind::global;
  h.grid_size = 4;
  h.hidden_dim = 3;
  h.layers = {0, 1};
  h.image_size = {64, 64};
  h.targets = {{7, "red car", 2}};
  h.question.question_text = "Is there a red car?";
  h.question.question_type = QuestionType::type1;
  return h;
}

std::vector<NamedTensor> small_tensors(const DumpHeader& h) {
  std::vector<NamedTensor> out;
  float x = 0.0f;
  for (int l : h.layers) {
    Tensor v{{16, 3}, {}};
    for (int i = 0; i < 48; ++i) v.values.push_back(x += 0.5f);
    out.push_back({visual_tensor_name(FeatureKind::value, l), v});
    Tensor t{{2, 3}, {1, 2, 3, 4, 5, 6}};
    out.push_back({target_tensor_name(FeatureKind::value, 7, l), t});
  }
  return out;
}

DumpErrc code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    read_dump(bytes);
  } catch (const DumpError& e) {
    return e.code();
  }
  FAIL("dump was accepted");
  return DumpErrc::bad_magic;
}

}  // namespace

TEST_CASE("empty tensor list gives magic plus header only") {
  DumpHeader h = small_header();
  h.layers.clear();
  const auto bytes = write_dump(h, {});
  REQUIRE(bytes.size() > 12);
  CHECK(std::memcmp(bytes.data(), "FOCUSKV1", 8) == 0);
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 8, 4);
  CHECK(bytes.size() == 12 + len);
  const Dump d = read_dump(bytes);
  CHECK(d.header().tensor_index.empty());
}

TEST_CASE("one (2,3) tensor occupies 24 bytes padded to 64") {
  DumpHeader h = small_header();
  h.layers.clear();
  const auto bytes = write_dump(h, {{"extra/blob", Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}}}});
  const Dump d = read_dump(bytes);
  const TensorEntry& e = d.entry("extra/blob");
  CHECK(e.byte_offset == 0);
  CHECK(e.byte_length == 24);
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 8, 4);
  CHECK(bytes.size() - 12 - len == 64);
  CHECK(d.tensor("extra/blob").values == std::vector<float>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("valid 2-layer global dump with a=4 exposes two (16, d) visual tensors") {
  const DumpHeader h = small_header();
  const Dump d = read_dump(write_dump(h, small_tensors(h)));
  for (int l : {0, 1}) {
    const Tensor t = d.tensor(visual_tensor_name(FeatureKind::value, l));
    CHECK(t.shape == std::vector<std::int64_t>{16, 3});
  }
  std::vector<float> row(3);
  d.read_row(d.entry("value/visual/1"), 2, row);
  CHECK(row[0] == doctest::Approx(d.tensor("value/visual/1").values[6]));
}

TEST_CASE("payload offsets are 64-byte aligned and non-overlapping") {
  const DumpHeader h = small_header();
  const Dump d = read_dump(write_dump(h, small_tensors(h)));
  std::uint64_t end = 0;
  for (const auto& e : d.header().tensor_index) {
    CHECK(e.byte_offset % 64 == 0);
    CHECK(e.byte_offset >= end);
    end = e.byte_offset + e.byte_length;
  }
}

TEST_CASE("round trip of random dumps is bit exact") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dump a = testing::random_dump(seed, {.with_keys = seed % 3 == 0});
    const auto bytes = write_dump(a.header(), a.tensors());
    const Dump b = read_dump(bytes);
    CHECK(a.header() == b.header());
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      CHECK(ta[i].name == tb[i].name);
      CHECK(std::memcmp(ta[i].tensor.values.data(), tb[i].tensor.values.data(),
                        ta[i].tensor.values.size() * sizeof(float)) == 0);
    }
    CHECK(write_dump(b.header(), b.tensors()) == bytes);
  }
}

TEST_CASE("corrupted magic is rejected") {
  const DumpHeader h = small_header();
  auto bytes = write_dump(h, small_tensors(h));
  bytes[0] = 'X';
  try {
    read_dump(bytes);
    FAIL("accepted");
  } catch (const DumpError& e) {
    CHECK(e.code() == DumpErrc::bad_magic);
    CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
  }
}

TEST_CASE("layers [3,2] are rejected as not increasing") {
  const DumpHeader h = small_header();
  const auto bytes = rewrite_header(write_dump(h, small_tensors(h)), [](json& j) { j["layers"] = {3, 2}; });
  try {
    read_dump(bytes);
    FAIL("accepted");
  } catch (const DumpError& e) {
    CHECK(e.code() == DumpErrc::layers_not_increasing);
    CHECK(e.field() == "layers");
    CHECK(std::string(e.what()).find("layers not increasing") != std::string::npos);
  }
}

TEST_CASE("every header violation maps to its own error code") {
  const DumpHeader h = small_header();
  const auto good = write_dump(h, small_tensors(h));
  using Edit = std::function<void(json&)>;
  const std::vector<std::pair<DumpErrc, Edit>> cases = {
      {DumpErrc::unsupported_version, [](json& j) { j["format_version"] = 99; }},
      {DumpErrc::invalid_dimensions, [](json& j) { j["hidden_dim"] = 0; }},
      {DumpErrc::global_with_crops, [](json& j) { j["crop_count_b"] = 2; }},
      {DumpErrc::local_dims_mismatch,
       [](json& j) {
         j["view_kind"] = "global_local";
         j["crop_count_b"] = 1;
         j["local_dims"] = {{"h", 3}, {"w", 3}};
       }},
      {DumpErrc::layers_not_increasing, [](json& j) { j["layers"] = {1, 1}; }},
      {DumpErrc::bad_token_count, [](json& j) { j["targets"][0]["token_count"] = 0; }},
      {DumpErrc::duplicate_target_id,
       [](json& j) { j["targets"].push_back({{"target_id", 7}, {"surface_text", "x"}, {"token_count", 2}}); }},
      {DumpErrc::gt_box_outside_image,
       [](json& j) { j["question"]["gt_boxes"] = {{{"target_id", 7}, {"rect", {0, 0, 65, 10}}}}; }},
      {DumpErrc::tensor_out_of_bounds, [](json& j) { j["tensor_index"][3]["byte_offset"] = 1 << 20; }},
      {DumpErrc::tensor_overlap,
       [](json& j) { j["tensor_index"][1]["byte_offset"] = j["tensor_index"][0]["byte_offset"]; }},
      {DumpErrc::tensor_misaligned, [](json& j) { j["tensor_index"][1]["byte_offset"] = 200; }},
      {DumpErrc::tensor_length_mismatch, [](json& j) { j["tensor_index"][0]["byte_length"] = 4; }},
      {DumpErrc::tensor_shape_mismatch, [](json& j) { j["tensor_index"][0]["shape"] = {8, 6}; }},
      {DumpErrc::missing_tensor, [](json& j) { j["tensor_index"][0]["name"] = "value/visual/9"; }},
      {DumpErrc::malformed_header, [](json& j) { j.erase("layers"); }},
  };
  std::set<DumpErrc> seen;
  for (const auto& [expected, edit] : cases) {
    CAPTURE(to_string(expected));
    CHECK(code_of(rewrite_header(good, edit)) == expected);
    seen.insert(expected);
  }
  CHECK(seen.size() == cases.size());

  auto truncated = good;
  truncated.resize(truncated.size() - 10);
  CHECK(code_of(truncated) == DumpErrc::truncated);
}

TEST_CASE("write_dump rejects tensors that disagree with the header") {
  DumpHeader h = small_header();
  auto tensors = small_tensors(h);
  tensors[0].tensor.shape = {15, 3};
  tensors[0].tensor.values.resize(45);
  CHECK_THROWS_AS(write_dump(h, tensors), DumpError);

  tensors = small_tensors(h);
  tensors[0].tensor.values.pop_back();
  CHECK_THROWS_AS(write_dump(h, tensors), DumpError);

  tensors = small_tensors(h);
  tensors.pop_back();
  CHECK_THROWS_AS(write_dump(h, tensors), DumpError);
}

TEST_CASE("global_local dumps carry a^2 (b + 1) visual tokens") {
  synthetic::SceneOptions o;
  o.view_kind = ViewKind::global_local;
  o.grid_size = 6;
  o.crop_count = 4;
  o.cell_pixels = 32;
  const auto scene = synthetic::make_scene(3, o);
  const Dump d = synthetic::generate_dump(scene);
  CHECK(d.header().visual_token_count() == 36 * 5);
  CHECK(d.tensor("value/visual/14").shape == std::vector<std::int64_t>{180, 64});
  CHECK(d.header().local_rows * d.header().local_cols == 36 * 4);
}

TEST_CASE("files are written atomically and read back") {
  const auto dir = std::filesystem::temp_directory_path() / "focus_tensor_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "x.fkv").string();
  const DumpHeader h = small_header();
  save_dump(path, h, small_tensors(h));
  CHECK(load_dump(path).header().targets == h.targets);
  for (const auto& f : std::filesystem::directory_iterator(dir))
    CHECK(f.path().filename().string().find(".tmp") == std::string::npos);
  std::filesystem::remove_all(dir);
}
