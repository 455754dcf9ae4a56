#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "focus/config.hpp"
#include "focus/metrics.hpp"
#include "focus/pipeline.hpp"
#include "focus/synthetic.hpp"
#include "focus/tensor_io.hpp"

namespace py = pybind11;
using namespace focus;

namespace {

py::tuple rect_tuple(const PixelRect& r) { return py::make_tuple(r.x0, r.y0, r.x1, r.y1); }

RunConfig config_from(const py::dict& overrides) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& [k, v] : overrides) kv.emplace_back(py::str(k), py::str(v));
  return make_run_config(std::nullopt, kv);
}

py::list grid_rows(const Grid& g) {
  py::list rows;
  for (int r = 0; r < g.rows(); ++r) {
    py::list row;
    for (int c = 0; c < g.cols(); ++c) row.append(g(r, c));
    rows.append(row);
  }
  return rows;
}

py::dict proposal_dict(const RoiProposal& p) {
  py::dict d;
  d["grid_rect"] = py::make_tuple(p.rect.top, p.rect.left, p.rect.bottom, p.rect.right);
  d["pixel_rect"] = rect_tuple(p.pixel_rect);
  d["anchor"] = py::make_tuple(p.anchor.row, p.anchor.col, p.anchor.score);
  d["mean_relevance"] = p.mean_relevance;
  d["confidence"] = p.confidence ? py::object(py::float_(*p.confidence)) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_focus, m) {
  m.doc() = "Relevance maps, ROI proposals and oracle-ranked search over .fkv dumps";

  py::register_exception<io::DumpError>(m, "DumpError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("existence_confidence", py::overload_cast<double, double>(&existence_confidence), py::arg("l_yes"),
        py::arg("l_no"));

  m.def(
      "efficiency_ratio",
      [](const std::vector<std::pair<double, double>>& ours, const std::vector<std::pair<double, double>>& ref) {
        const auto conv = [](const std::vector<std::pair<double, double>>& pts) {
          std::vector<metrics::CurvePoint> out;
          for (const auto& [acc, fp] : pts) out.push_back({acc, fp});
          return out;
        };
        return metrics::efficiency_ratio(conv(ours), conv(ref));
      },
      py::arg("ours"), py::arg("ref"), "Curves are lists of (accuracy, fp) pairs.");

  m.def(
      "generate_scene",
      [](std::uint64_t seed, double noise, const std::string& path) {
        synthetic::SceneOptions o;
        o.noise_level = noise;
        const auto scene = synthetic::make_scene(seed, o);
        const auto g = synthetic::generate_tensors(scene);
        io::save_dump(path, g.header, g.tensors);
        return synthetic::scene_to_json(scene);
      },
      py::arg("seed"), py::arg("noise"), py::arg("path"), "Writes a synthetic .fkv and returns the scene JSON.");

  m.def(
      "read_header",
      [](const std::string& path) {
        const io::Dump d = io::load_dump(path);
        py::dict out;
        const auto& h = d.header();
        out["model_id"] = h.model_id;
        out["view_kind"] = std::string(io::to_string(h.view_kind));
        out["grid_size"] = h.grid_size;
        out["hidden_dim"] = h.hidden_dim;
        out["layers"] = h.layers;
        out["image_size"] = py::make_tuple(h.image_size.width, h.image_size.height);
        py::list targets;
        for (const auto& t : h.targets) targets.append(py::make_tuple(t.target_id, t.surface_text, t.token_count));
        out["targets"] = targets;
        py::list names;
        for (const auto& e : h.tensor_index) names.append(e.name);
        out["tensors"] = names;
        return out;
      },
      py::arg("path"));

  m.def(
      "build_map",
      [](const std::string& path, int target_id, const py::dict& overrides) {
        return grid_rows(target_map(io::load_dump(path), target_id, config_from(overrides)).values);
      },
      py::arg("path"), py::arg("target_id"), py::arg("config") = py::dict());

  m.def(
      "propose",
      [](const std::string& path, int target_id, const py::dict& overrides) {
        const io::Dump d = io::load_dump(path);
        const RunConfig c = config_from(overrides);
        py::list out;
        for (const auto& p : propose(target_map(d, target_id, c).values, c.proposal, d.header().image_size))
          out.append(proposal_dict(p));
        return out;
      },
      py::arg("path"), py::arg("target_id"), py::arg("config") = py::dict());

  m.def(
      "search_synthetic",
      [](const std::string& path, const std::string& scene_json, const py::dict& overrides) {
        const io::Dump d = io::load_dump(path);
        synthetic::GeometricOracle oracle(synthetic::scene_from_json(scene_json));
        const SearchResult r = run_search(d, oracle, config_from(overrides));
        py::dict out;
        out["predicted"] = r.predicted;
        out["plan"] = plan_to_json(r.plan);
        out["fp_total"] = r.fp.total;
        out["fp_existence_queries"] = r.fp.existence_queries;
        py::list rects;
        for (const auto& rect : r.proposed_rects) rects.append(rect_tuple(rect));
        out["proposed_rects"] = rects;
        return out;
      },
      py::arg("path"), py::arg("scene_json"), py::arg("config") = py::dict());
}
