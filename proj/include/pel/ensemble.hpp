#pragma once

// Two-stage selector inference, the perfect-selector bound and the
// base / NMS / selector / oracle comparison table.

#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pel/features.hpp"
#include "pel/fusion.hpp"
#include "pel/scoring.hpp"
#include "pel/selector.hpp"

namespace pel {

using SceneSet = std::map<std::string, SceneSample>;

inline RegionMap ground_truth_of(const SceneSet& scenes) {
  RegionMap gt;
  for (const auto& [id, s] : scenes) gt[id] = s.regions;
  return gt;
}

inline SceneSet scenes_from(const RegionMap& gt, double width = kDefaultExtent, double height = kDefaultExtent) {
  SceneSet out;
  for (const auto& [id, regions] : gt) out[id] = SceneSample{id, width, height, regions};
  return out;
}

struct SelectionTrace {
  std::string image_id;
  std::size_t selected = 0;
  std::vector<std::size_t> consulted;  // indices of the models whose outputs were read
  EvalCounts counts;
  double f_score = 0.0;
};

struct EnsembleResult {
  PrfScore dataset;
  std::vector<SelectionTrace> trace;  // ordered by image_id
};

/// Stage one picks a model from the scene features; stage two reads and
/// scores only that model's output for the image.
template <typename Policy>
EnsembleResult evaluate_with_policy(Policy&& choose, std::size_t num_models, const FeatureExtractor& extractor,
                                    std::span<const RegionMap> model_outputs, const SceneSet& scenes,
                                    const MatchConfig& cfg) {
  check(cfg);
  if (model_outputs.size() != num_models) {
    throw InputError("selector scores " + std::to_string(num_models) + " models but " +
                     std::to_string(model_outputs.size()) + " outputs were given");
  }
  for (const RegionMap& m : model_outputs) {
    for (const auto& [id, _] : m) {
      if (!scenes.contains(id)) throw InputError("image_id '" + id + "' has detections but no ground truth");
    }
  }
  EnsembleResult res;
  std::vector<EvalCounts> all;
  for (const auto& [id, scene] : scenes) {
    SelectionTrace t;
    t.image_id = id;
    t.selected = choose(extractor.extract(scene));
    if (t.selected >= num_models) throw InputError("policy selected model out of range");
    t.consulted.push_back(t.selected);
    const RegionMap& chosen = model_outputs[t.selected];
    const auto it = chosen.find(id);
    t.counts = it == chosen.end() ? match_regions({}, scene.regions, cfg)
                                  : match_regions(it->second, scene.regions, cfg);
    t.f_score = prf(t.counts).f_score;
    all.push_back(t.counts);
    res.trace.push_back(std::move(t));
  }
  res.dataset = micro_aggregate(all);
  return res;
}

inline EnsembleResult pel_evaluate(const SelectorNet& net, const FeatureExtractor& extractor,
                                   std::span<const RegionMap> model_outputs, const SceneSet& scenes,
                                   const MatchConfig& cfg = {}) {
  if (net.input_dim() != extractor.dimension()) {
    throw InputError("selector input " + std::to_string(net.input_dim()) + " does not match extractor dimension " +
                     std::to_string(extractor.dimension()));
  }
  return evaluate_with_policy([&](const std::vector<double>& x) { return select(net, x); }, net.output_dim(),
                              extractor, model_outputs, scenes, cfg);
}

struct OracleResult {
  PrfScore dataset;
  std::map<std::string, std::size_t> choice;
  std::map<std::string, double> f_score;
};

/// Per image, the model with the highest F (lowest index on ties or when
/// every model scores zero).
inline OracleResult oracle_evaluate(std::span<const RegionMap> model_outputs, const RegionMap& gt,
                                    const MatchConfig& cfg = {}) {
  if (model_outputs.empty()) throw InputError("oracle needs at least one model");
  std::vector<ModelScore> scores;
  for (const RegionMap& m : model_outputs) scores.push_back(score_model(m, gt, cfg));
  OracleResult res;
  std::vector<EvalCounts> all;
  for (const auto& [id, _] : gt) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
      if (scores[k].per_image.at(id).f_score > scores[best].per_image.at(id).f_score) best = k;
    }
    res.choice[id] = best;
    res.f_score[id] = scores[best].per_image.at(id).f_score;
    all.push_back(scores[best].counts.at(id));
  }
  res.dataset = micro_aggregate(all);
  return res;
}

struct ReportRow {
  std::string method;
  PrfScore score;
  bool recall_exceeds_one = false;  // only possible in paper_literal matching

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ComparisonReport {
  MatchConfig match;
  double nms_iou = 0.5;
  std::vector<ReportRow> rows;  // base models, NMS, PEL, Oracle
  std::vector<SelectionTrace> pel_trace;
  std::map<std::string, std::size_t> oracle_choice;
};

inline ReportRow make_row(std::string name, const PrfScore& s) {
  return {std::move(name), s, s.recall > 1.0};
}

inline ComparisonReport compare_report(const SceneSet& scenes, std::span<const RegionMap> model_outputs,
                                       const SelectorNet& net, const FeatureExtractor& extractor,
                                       const MatchConfig& cfg = {}, double nms_iou = 0.5,
                                       std::span<const std::string> model_names = {}) {
  const RegionMap gt = ground_truth_of(scenes);
  ComparisonReport rep;
  rep.match = cfg;
  rep.nms_iou = nms_iou;
  for (std::size_t k = 0; k < model_outputs.size(); ++k) {
    const std::string name = k < model_names.size() ? model_names[k] : "model_" + std::to_string(k);
    rep.rows.push_back(make_row(name, score_model(model_outputs[k], gt, cfg).dataset));
  }
  rep.rows.push_back(make_row("NMS", fuse_and_score(model_outputs, gt, nms_iou, cfg).dataset));
  EnsembleResult pel = pel_evaluate(net, extractor, model_outputs, scenes, cfg);
  rep.rows.push_back(make_row("PEL", pel.dataset));
  rep.pel_trace = std::move(pel.trace);
  OracleResult oracle = oracle_evaluate(model_outputs, gt, cfg);
  rep.rows.push_back(make_row("Oracle", oracle.dataset));
  rep.oracle_choice = std::move(oracle.choice);
  return rep;
}

inline const ReportRow& row(const ComparisonReport& rep, const std::string& method) {
  for (const ReportRow& r : rep.rows) {
    if (r.method == method) return r;
  }
  throw InputError("report has no row '" + method + "'");
}

/// Aligned plain-text table, percentages with one decimal.
inline std::string format_table(const ComparisonReport& rep) {
  std::size_t width = 6;
  for (const ReportRow& r : rep.rows) width = std::max(width, r.method.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s\n", static_cast<int>(width), "Method", "Precision", "Recall",
                "F-score");
  out += buf;
  out += std::string(width + 33, '-') + "\n";
  for (const ReportRow& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.1f  %9.1f  %9.1f%s\n", static_cast<int>(width), r.method.c_str(),
                  100.0 * r.score.precision, 100.0 * r.score.recall, 100.0 * r.score.f_score,
                  r.recall_exceeds_one ? "  (recall > 1: duplicate matches)" : "");
    out += buf;
  }
  return out;
}

}  // namespace pel
