#pragma once

// JSON and JSON-lines wire formats.
//
//   ground truth   {"image_id": s, "extent": [w, h], "regions": [{"polygon": [[x, y], ...], "dont_care": b}]}
//   detections     {"image_id": s, "regions": [{"polygon": [[x, y], ...], "confidence": c}]}
//   selector data  {"image_id": s, "features": [...], "f_scores": [...], "labels": [...]}
//
// "extent" is optional on input and defaults to 512 x 512.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pel/ensemble.hpp"
#include "pel/error.hpp"
#include "pel/labeling.hpp"
#include "pel/selector.hpp"

namespace pel {

using Json = nlohmann::json;

namespace detail {

inline Json polygon_json(const Polygon& p) {
  Json ring = Json::array();
  for (const Point& v : p.vertices()) ring.push_back({v.x, v.y});
  return ring;
}

inline Polygon polygon_from(const Json& j) {
  if (!j.is_array()) throw InputError("polygon must be an array of [x, y] pairs");
  std::vector<Point> pts;
  for (const Json& v : j) {
    if (!v.is_array() || v.size() != 2) throw InputError("polygon vertex must be [x, y]");
    pts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  }
  return Polygon(std::move(pts));
}

template <typename Fn>
auto with_schema_context(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw InputError(where + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

}  // namespace detail

inline Json scene_to_json(const SceneSample& s) {
  Json regions = Json::array();
  for (const Region& r : s.regions) {
    regions.push_back({{"polygon", detail::polygon_json(r.polygon)}, {"dont_care", r.dont_care}});
  }
  return {{"image_id", s.image_id}, {"extent", {s.width, s.height}}, {"regions", regions}};
}

inline SceneSample scene_from_json(const Json& j) {
  SceneSample s;
  s.image_id = j.at("image_id").get<std::string>();
  if (j.contains("extent")) {
    const Json& e = j.at("extent");
    if (!e.is_array() || e.size() != 2) throw InputError("extent must be [width, height]");
    s.width = e.at(0).get<double>();
    s.height = e.at(1).get<double>();
    if (!(s.width > 0.0 && s.height > 0.0)) throw InputError("extent must be positive");
  }
  for (const Json& r : j.at("regions")) {
    Region reg;
    reg.polygon = detail::polygon_from(r.at("polygon"));
    reg.dont_care = r.value("dont_care", false);
    s.regions.push_back(std::move(reg));
  }
  return s;
}

inline Json detections_to_json(const std::string& id, const std::vector<Region>& dets) {
  Json regions = Json::array();
  for (const Region& r : dets) {
    regions.push_back({{"polygon", detail::polygon_json(r.polygon)}, {"confidence", r.confidence}});
  }
  return {{"image_id", id}, {"regions", regions}};
}

inline std::vector<Region> detections_from_json(const Json& j) {
  std::vector<Region> out;
  for (const Json& r : j.at("regions")) {
    Region reg;
    reg.polygon = detail::polygon_from(r.at("polygon"));
    reg.confidence = r.value("confidence", 1.0);
    if (!(reg.confidence >= 0.0 && reg.confidence <= 1.0)) throw InputError("confidence must lie in [0, 1]");
    out.push_back(std::move(reg));
  }
  return out;
}

template <typename Parse>
auto read_jsonl(const std::string& path, Parse&& parse) {
  std::vector<decltype(parse(Json{}))> out;
  std::size_t line_no = 0;
  for (const std::string& line : detail::read_lines(path)) {
    ++line_no;
    out.push_back(detail::with_schema_context(path + ":" + std::to_string(line_no),
                                              [&] { return parse(Json::parse(line)); }));
  }
  return out;
}

inline SceneSet read_ground_truth(const std::string& path) {
  SceneSet out;
  for (SceneSample& s : read_jsonl(path, scene_from_json)) {
    const std::string id = s.image_id;
    if (!out.emplace(id, std::move(s)).second) throw InputError(path + ": duplicate image_id '" + id + "'");
  }
  return out;
}

inline RegionMap read_detections(const std::string& path) {
  RegionMap out;
  auto rows = read_jsonl(path, [](const Json& j) {
    return std::make_pair(j.at("image_id").get<std::string>(), detections_from_json(j));
  });
  for (auto& [id, dets] : rows) {
    if (!out.emplace(id, std::move(dets)).second) throw InputError(path + ": duplicate image_id '" + id + "'");
  }
  return out;
}

inline std::string ground_truth_jsonl(const SceneSet& scenes) {
  std::string text;
  for (const auto& [_, s] : scenes) text += scene_to_json(s).dump() + "\n";
  return text;
}

inline std::string detections_jsonl(const RegionMap& dets) {
  std::string text;
  for (const auto& [id, regions] : dets) text += detections_to_json(id, regions).dump() + "\n";
  return text;
}

inline Json record_to_json(const LabelRecord& r) {
  return {{"image_id", r.image_id}, {"features", r.features}, {"f_scores", r.f_scores}, {"labels", r.labels}};
}

inline LabelRecord record_from_json(const Json& j) {
  LabelRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.features = j.at("features").get<std::vector<double>>();
  r.f_scores = j.at("f_scores").get<std::vector<double>>();
  r.labels = j.at("labels").get<std::vector<int>>();
  if (r.f_scores.size() != r.labels.size()) throw InputError("f_scores and labels differ in length");
  for (int v : r.labels) {
    if (v != 0 && v != 1) throw InputError("labels must be 0 or 1");
  }
  return r;
}

inline std::string dataset_jsonl(const std::vector<LabelRecord>& records) {
  std::string text;
  for (const LabelRecord& r : records) text += record_to_json(r).dump() + "\n";
  return text;
}

inline std::vector<LabelRecord> read_dataset(const std::string& path) {
  auto records = read_jsonl(path, record_from_json);
  detail::with_schema_context(path, [&] {
    check_dataset(records);
    return 0;
  });
  return records;
}

inline Json config_to_json(const TrainConfig& c) {
  return {{"hidden", c.hidden},
          {"batch_size", c.batch_size},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"lr_initial", c.lr_initial},
          {"lr_decay_factor", c.lr_decay_factor},
          {"lr_decay_epochs", c.lr_decay_epochs},
          {"lr_floor", c.lr_floor},
          {"ohem_fraction", c.ohem_fraction},
          {"beta_clamp", c.beta_clamp},
          {"p_mask_initial", c.p_mask_initial},
          {"p_mask_final", c.p_mask_final},
          {"seed", c.seed}};
}

/// Missing keys keep their defaults.
inline TrainConfig config_from_json(const Json& j) {
  return detail::with_schema_context("train config", [&] {
    TrainConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_epochs = j.value("lr_decay_epochs", c.lr_decay_epochs);
    c.lr_floor = j.value("lr_floor", c.lr_floor);
    c.ohem_fraction = j.value("ohem_fraction", c.ohem_fraction);
    c.beta_clamp = j.value("beta_clamp", c.beta_clamp);
    c.p_mask_initial = j.value("p_mask_initial", c.p_mask_initial);
    c.p_mask_final = j.value("p_mask_final", c.p_mask_final);
    c.seed = j.value("seed", c.seed);
    validate(c);
    return c;
  });
}

struct SelectorFile {
  SelectorNet net;
  std::string extractor_id;
  std::size_t extractor_dim = 0;
  TrainConfig config;
};

inline Json selector_to_json(const SelectorFile& f) {
  Json layers = Json::array();
  for (const DenseLayer& l : f.net.layers) layers.push_back({{"weights", l.weights}, {"biases", l.biases}});
  return {{"layer_dims", f.net.layer_dims},
          {"layers", layers},
          {"feature_extractor", {{"id", f.extractor_id}, {"dimension", f.extractor_dim}}},
          {"train_config", config_to_json(f.config)},
          {"seed", f.config.seed}};
}

inline SelectorFile selector_from_json(const Json& j) {
  return detail::with_schema_context("selector weights", [&] {
    SelectorFile f;
    f.net = SelectorNet::zeros(j.at("layer_dims").get<std::vector<std::size_t>>());
    const Json& layers = j.at("layers");
    if (layers.size() != f.net.layers.size()) throw InputError("layer count does not match layer_dims");
    for (std::size_t l = 0; l < f.net.layers.size(); ++l) {
      DenseLayer& layer = f.net.layers[l];
      auto w = layers.at(l).at("weights").get<std::vector<double>>();
      auto b = layers.at(l).at("biases").get<std::vector<double>>();
      if (w.size() != layer.weights.size() || b.size() != layer.biases.size()) {
        throw InputError("layer " + std::to_string(l) + " has the wrong number of parameters");
      }
      layer.weights = std::move(w);
      layer.biases = std::move(b);
    }
    f.extractor_id = j.at("feature_extractor").at("id").get<std::string>();
    f.extractor_dim = j.at("feature_extractor").at("dimension").get<std::size_t>();
    if (f.extractor_dim != f.net.input_dim()) throw InputError("extractor dimension does not match layer_dims");
    f.config = config_from_json(j.value("train_config", Json::object()));
    return f;
  });
}

inline Json train_log_to_json(const std::vector<EpochLog>& log) {
  Json out = Json::array();
  for (const EpochLog& e : log) {
    out.push_back({{"epoch", e.epoch},
                   {"lr", e.lr},
                   {"p_mask", e.p_mask},
                   {"mean_loss", e.mean_loss},
                   {"train_accuracy", e.train_accuracy}});
  }
  return out;
}

inline Json score_to_json(const PrfScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f_score", s.f_score}};
}

inline PrfScore score_from_json(const Json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f_score").get<double>()};
}

inline Json report_to_json(const ComparisonReport& rep) {
  Json rows = Json::array();
  for (const ReportRow& r : rep.rows) {
    Json row = score_to_json(r.score);
    row["method"] = r.method;
    row["recall_exceeds_one"] = r.recall_exceeds_one;
    rows.push_back(row);
  }
  Json trace = Json::array();
  for (const SelectionTrace& t : rep.pel_trace) {
    trace.push_back({{"image_id", t.image_id},
                     {"selected", t.selected},
                     {"consulted", t.consulted},
                     {"counts", {t.counts.n_match, t.counts.n_det, t.counts.n_gt}},
                     {"f_score", t.f_score},
                     {"oracle_choice", rep.oracle_choice.at(t.image_id)}});
  }
  return {{"tau", rep.match.tau},
          {"match_mode", to_string(rep.match.mode)},
          {"nms_iou", rep.nms_iou},
          {"rows", rows},
          {"pel_trace", trace}};
}

inline ComparisonReport report_from_json(const Json& j) {
  return detail::with_schema_context("report", [&] {
    ComparisonReport rep;
    rep.match.tau = j.at("tau").get<double>();
    rep.match.mode = parse_match_mode(j.at("match_mode").get<std::string>());
    rep.nms_iou = j.at("nms_iou").get<double>();
    for (const Json& r : j.at("rows")) {
      rep.rows.push_back({r.at("method").get<std::string>(), score_from_json(r), r.at("recall_exceeds_one").get<bool>()});
    }
    for (const Json& t : j.at("pel_trace")) {
      SelectionTrace st;
      st.image_id = t.at("image_id").get<std::string>();
      st.selected = t.at("selected").get<std::size_t>();
      st.consulted = t.at("consulted").get<std::vector<std::size_t>>();
      const auto c = t.at("counts").get<std::vector<long>>();
      if (c.size() != 3) throw InputError("counts must be [n_match, n_det, n_gt]");
      st.counts = {c[0], c[1], c[2]};
      st.f_score = t.at("f_score").get<double>();
      rep.oracle_choice[st.image_id] = t.at("oracle_choice").get<std::size_t>();
      rep.pel_trace.push_back(std::move(st));
    }
    return rep;
  });
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return detail::with_schema_context(path, [&] { return Json::parse(buf.str()); });
}

inline void write_file(const std::string& path, const std::string& text) { detail::write_text(path, text); }

}  // namespace pel
