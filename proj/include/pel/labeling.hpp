#pragma once

// Turns per-model evaluation into a multi-label selector dataset.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pel/error.hpp"
#include "pel/scoring.hpp"

namespace pel {

inline constexpr double kTieTol = 1e-9;

struct LabelRecord {
  std::string image_id;
  std::vector<double> features;
  std::vector<double> f_scores;
  std::vector<int> labels;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

using FeatureMap = std::map<std::string, std::vector<double>>;

/// Every model whose F equals the (non-zero) maximum is positive; an image no
/// model handles at all is negative for every model.
inline std::vector<int> make_label(std::span<const double> f_scores) {
  if (f_scores.empty()) throw InputError("make_label: need at least one model score");
  const double best = *std::max_element(f_scores.begin(), f_scores.end());
  std::vector<int> labels(f_scores.size(), 0);
  if (best <= 0.0) return labels;
  for (std::size_t i = 0; i < f_scores.size(); ++i) {
    labels[i] = std::abs(f_scores[i] - best) <= kTieTol ? 1 : 0;
  }
  return labels;
}

inline bool all_zero(std::span<const int> labels) {
  return std::none_of(labels.begin(), labels.end(), [](int v) { return v != 0; });
}

/// One record per ground-truth image, sorted by image_id.
inline std::vector<LabelRecord> build_dataset(const RegionMap& gt, std::span<const RegionMap> model_outputs,
                                              const FeatureMap& features, const MatchConfig& cfg = {}) {
  if (model_outputs.empty()) throw InputError("build_dataset: no base models given");
  std::vector<ModelScore> scores;
  scores.reserve(model_outputs.size());
  for (const RegionMap& m : model_outputs) scores.push_back(score_model(m, gt, cfg));

  std::vector<LabelRecord> out;
  out.reserve(gt.size());
  std::size_t dim = 0;
  for (const auto& [id, _] : gt) {
    const auto f = features.find(id);
    if (f == features.end()) throw InputError("no feature vector for image_id '" + id + "'");
    if (out.empty()) {
      dim = f->second.size();
    } else if (f->second.size() != dim) {
      throw InputError("feature length " + std::to_string(f->second.size()) + " for '" + id +
                       "' differs from " + std::to_string(dim));
    }
    LabelRecord rec;
    rec.image_id = id;
    rec.features = f->second;
    for (const ModelScore& s : scores) rec.f_scores.push_back(s.per_image.at(id).f_score);
    rec.labels = make_label(rec.f_scores);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<LabelRecord> drop_all_zero(std::vector<LabelRecord> records) {
  std::erase_if(records, [](const LabelRecord& r) { return all_zero(r.labels); });
  return records;
}

}  // namespace pel
