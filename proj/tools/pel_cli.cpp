// pel: command-line driver for the selector ensemble workflow.
//
//   pel gen     --seed S --out DIR
//   pel eval    --gt gt.jsonl --det det.jsonl
//   pel labels  --gt gt.jsonl --det d0 d1 d2 --extract --out data.jsonl
//   pel train   --dataset data.jsonl --out weights.json
//   pel pel | nms | oracle | report  --gt gt.jsonl --det d0 d1 d2 [--weights weights.json]
//
// Exit codes: 0 success, 2 I/O error, 3 schema or shape error, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pel/pel.hpp"

namespace {

using namespace pel;

constexpr int kExitIo = 2;
constexpr int kExitSchema = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::string gt;
  std::vector<std::string> dets;
  double tau = 0.5;
  std::string match_mode = "one_to_one";
  std::string splits;
  std::string split;

  MatchConfig match() const {
    MatchConfig cfg{tau, parse_match_mode(match_mode)};
    check(cfg);
    return cfg;
  }
};

void add_match_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--tau", c.tau, "IoU threshold for a match (strict >)")->capture_default_str();
  cmd->add_option("--match-mode", c.match_mode, "one_to_one | paper_literal")->capture_default_str();
}

void add_split_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--splits", c.splits, "splits.json written by 'gen'");
  cmd->add_option("--split", c.split, "train | test (requires --splits)");
}

std::optional<std::vector<std::string>> split_ids(const Common& c) {
  if (c.splits.empty() && c.split.empty()) return std::nullopt;
  if (c.splits.empty() || c.split.empty()) throw InputError("--splits and --split must be given together");
  const Json j = read_json_file(c.splits);
  if (!j.contains(c.split)) throw InputError("splits file has no '" + c.split + "' list");
  return detail::with_schema_context(c.splits, [&] { return j.at(c.split).get<std::vector<std::string>>(); });
}

SceneSet load_scenes(const Common& c) {
  SceneSet scenes = read_ground_truth(c.gt);
  if (auto ids = split_ids(c)) scenes = subset(scenes, *ids);
  return scenes;
}

std::vector<RegionMap> load_outputs(const Common& c, const SceneSet& scenes) {
  if (c.dets.empty()) throw InputError("at least one --det file is required");
  std::vector<RegionMap> out;
  for (const std::string& path : c.dets) {
    RegionMap m = read_detections(path);
    if (!c.splits.empty()) {
      std::erase_if(m, [&](const auto& kv) { return !scenes.contains(kv.first); });
    }
    out.push_back(std::move(m));
  }
  return out;
}

void print_score(const std::string& name, const PrfScore& s) {
  std::printf("%s P=%.3f R=%.3f F=%.3f%s\n", name.c_str(), s.precision, s.recall, s.f_score,
              s.recall > 1.0 ? " (recall > 1: duplicate matches)" : "");
}

SelectorFile load_selector(const std::string& path, std::size_t num_models) {
  SelectorFile f = selector_from_json(read_json_file(path));
  if (f.net.output_dim() != num_models) {
    throw InputError("selector was trained for " + std::to_string(f.net.output_dim()) + " models but " +
                     std::to_string(num_models) + " detection files were given");
  }
  return f;
}

int cmd_gen(std::uint64_t seed, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

  const Benchmark b = standard_benchmark(seed);
  const SceneSet scenes = scene_set(b.scenes);
  const fs::path dir(out_dir);
  write_file((dir / "gt.jsonl").string(), ground_truth_jsonl(scenes));
  for (std::size_t k = 0; k < b.outputs.size(); ++k) {
    write_file((dir / ("det_" + std::to_string(k) + ".jsonl")).string(), detections_jsonl(b.outputs[k]));
  }
  Json regimes = Json::object();
  for (const SyntheticScene& s : b.scenes) regimes[s.sample.image_id] = to_string(s.regime);
  Json detectors = Json::array();
  for (const DetectorProfile& p : b.profiles) detectors.push_back(p.name);
  const Json splits{{"seed", seed}, {"train", b.train_ids}, {"test", b.test_ids}, {"regimes", regimes},
                    {"detectors", detectors}};
  write_file((dir / "splits.json").string(), splits.dump(2) + "\n");

  std::size_t regions = 0;
  for (const SyntheticScene& s : b.scenes) regions += s.sample.regions.size();
  std::printf("scenes=%zu train=%zu test=%zu regions=%zu detectors=%zu\n", b.scenes.size(), b.train_ids.size(),
              b.test_ids.size(), regions, b.outputs.size());
  return 0;
}

int cmd_eval(const Common& c, const std::string& json_out) {
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  const RegionMap gt = ground_truth_of(scenes);
  Json all = Json::array();
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const ModelScore s = score_model(outputs[k], gt, c.match());
    EvalCounts total;
    for (const auto& [_, cnt] : s.counts) total += cnt;
    print_score(c.dets[k], s.dataset);
    Json row = score_to_json(s.dataset);
    row["detections"] = c.dets[k];
    row["counts"] = {total.n_match, total.n_det, total.n_gt};
    row["recall_exceeds_one"] = s.dataset.recall > 1.0;
    all.push_back(row);
  }
  const Json doc{{"tau", c.tau}, {"match_mode", c.match_mode}, {"results", all}};
  if (json_out.empty()) {
    std::cout << doc.dump() << "\n";
  } else {
    write_file(json_out, doc.dump(2) + "\n");
  }
  return 0;
}

int cmd_labels(const Common& c, const std::string& features_path, bool extract, bool drop_zero,
               const std::string& out) {
  if (extract == !features_path.empty()) throw InputError("give exactly one of --features or --extract");
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  FeatureMap features;
  if (extract) {
    const SceneStatsExtractor ex;
    for (const auto& [id, s] : scenes) features[id] = ex.extract(s);
  } else {
    auto rows = read_jsonl(features_path, [](const Json& j) {
      return std::make_pair(j.at("image_id").get<std::string>(), j.at("features").get<std::vector<double>>());
    });
    for (auto& [id, f] : rows) features[id] = std::move(f);
  }
  std::vector<LabelRecord> records = build_dataset(ground_truth_of(scenes), outputs, features, c.match());
  if (drop_zero) records = drop_all_zero(std::move(records));
  write_file(out, dataset_jsonl(records));

  std::vector<std::size_t> positives(outputs.size(), 0);
  std::size_t multi = 0, none = 0;
  for (const LabelRecord& r : records) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < r.labels.size(); ++k) {
      positives[k] += r.labels[k];
      n += r.labels[k];
    }
    multi += n >= 2;
    none += n == 0;
  }
  std::printf("records=%zu multi_label=%zu all_zero=%zu positives=", records.size(), multi, none);
  for (std::size_t k = 0; k < positives.size(); ++k) std::printf("%s%zu", k ? "," : "", positives[k]);
  std::printf("\n");
  return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out, const std::string& log_out, const Common& scenes_for_aug) {
  const std::vector<LabelRecord> dataset = read_dataset(dataset_path);
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : config_from_json(read_json_file(config_path));
  if (seed) cfg.seed = *seed;

  const SceneStatsExtractor ex;
  TrainResult result;
  if (!scenes_for_aug.gt.empty()) {
    const SceneSet scenes = read_ground_truth(scenes_for_aug.gt);
    const std::vector<RegionMap> outputs = load_outputs(scenes_for_aug, scenes);
    if (outputs.size() != dataset.front().labels.size()) {
      throw InputError("dataset has " + std::to_string(dataset.front().labels.size()) + " labels but " +
                       std::to_string(outputs.size()) + " detection files were given");
    }
    const SceneAugmenter aug(dataset, scenes, outputs, ex, scenes_for_aug.match());
    result = train(dataset, cfg, aug.as_augmenter());
  } else {
    result = train(dataset, cfg);
  }

  write_file(out, selector_to_json({result.net, ex.id(), ex.dimension(), cfg}).dump() + "\n");
  if (!log_out.empty()) write_file(log_out, train_log_to_json(result.log).dump(2) + "\n");
  for (const EpochLog& e : result.log) {
    std::printf("epoch %3zu lr %.0e p_mask %.3f loss %.6f acc %.4f\n", e.epoch, e.lr, e.p_mask, e.mean_loss,
                e.train_accuracy);
  }
  return 0;
}

int cmd_pel(const Common& c, const std::string& weights, const std::string& trace_out) {
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  const SelectorFile f = load_selector(weights, outputs.size());
  const auto ex = make_extractor(f.extractor_id);
  const EnsembleResult r = pel_evaluate(f.net, *ex, outputs, scenes, c.match());
  print_score("PEL", r.dataset);
  if (!trace_out.empty()) {
    Json t = Json::array();
    for (const SelectionTrace& s : r.trace) {
      t.push_back({{"image_id", s.image_id}, {"selected", s.selected}, {"consulted", s.consulted},
                   {"f_score", s.f_score}});
    }
    write_file(trace_out, t.dump(2) + "\n");
  }
  return 0;
}

int cmd_nms(const Common& c, double nms_iou) {
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  print_score("NMS", fuse_and_score(outputs, ground_truth_of(scenes), nms_iou, c.match()).dataset);
  return 0;
}

int cmd_oracle(const Common& c) {
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  print_score("Oracle", oracle_evaluate(outputs, ground_truth_of(scenes), c.match()).dataset);
  return 0;
}

int cmd_report(const Common& c, const std::string& weights, double nms_iou, const std::string& json_out) {
  const SceneSet scenes = load_scenes(c);
  const std::vector<RegionMap> outputs = load_outputs(c, scenes);
  const SelectorFile f = load_selector(weights, outputs.size());
  const auto ex = make_extractor(f.extractor_id);
  std::vector<std::string> names;
  for (const std::string& d : c.dets) names.push_back(std::filesystem::path(d).stem().string());
  const ComparisonReport rep = compare_report(scenes, outputs, f.net, *ex, c.match(), nms_iou, names);
  std::cout << format_table(rep);
  if (!json_out.empty()) write_file(json_out, report_to_json(rep).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-example model selection for detection ensembles"};
  app.require_subcommand(1);

  std::uint64_t gen_seed = kStandardSeed;
  std::string out;
  auto* gen = app.add_subcommand("gen", "Write the synthetic benchmark (ground truth, detector outputs, splits)");
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", out, "output directory")->required();

  Common common;
  std::string json_out;
  auto* eval = app.add_subcommand("eval", "Precision / recall / F-score of detection files");
  eval->add_option("--gt", common.gt)->required();
  eval->add_option("--det", common.dets)->required();
  eval->add_option("--json", json_out, "write the JSON result here instead of stdout");
  add_match_flags(eval, common);
  add_split_flags(eval, common);

  std::string features_path;
  bool extract = false;
  bool drop_zero = false;
  auto* labels = app.add_subcommand("labels", "Build the selector dataset (JSON lines)");
  labels->add_option("--gt", common.gt)->required();
  labels->add_option("--det", common.dets)->required();
  labels->add_option("--features", features_path, "JSONL of {image_id, features}");
  labels->add_flag("--extract", extract, "compute scene-statistics features from the ground truth");
  labels->add_flag("--drop-all-zero", drop_zero, "omit images no model handles");
  labels->add_option("--out", out)->required();
  add_match_flags(labels, common);
  add_split_flags(labels, common);

  std::string dataset_path, config_path, log_out;
  std::optional<std::uint64_t> train_seed;
  auto* trn = app.add_subcommand("train", "Train the selector");
  trn->add_option("--dataset", dataset_path)->required();
  trn->add_option("--config", config_path, "JSON training config; missing keys use defaults");
  trn->add_option("--seed", train_seed, "overrides the config seed");
  trn->add_option("--out", out, "weights JSON")->required();
  trn->add_option("--log", log_out, "per-epoch training log JSON");
  trn->add_option("--gt", common.gt, "ground truth, enables scene augmentation together with --det");
  trn->add_option("--det", common.dets, "detector outputs used to relabel augmented scenes");
  add_match_flags(trn, common);

  std::string weights, trace_out;
  double nms_iou = 0.5;
  auto* pel_cmd = app.add_subcommand("pel", "Two-stage test with a trained selector");
  auto* nms_cmd = app.add_subcommand("nms", "Pool all detectors and apply NMS");
  auto* oracle_cmd = app.add_subcommand("oracle", "Perfect-selector upper bound");
  auto* report_cmd = app.add_subcommand("report", "Base models vs NMS vs PEL vs Oracle table");
  for (CLI::App* cmd : {pel_cmd, nms_cmd, oracle_cmd, report_cmd}) {
    cmd->add_option("--gt", common.gt)->required();
    cmd->add_option("--det", common.dets)->required();
    add_match_flags(cmd, common);
    add_split_flags(cmd, common);
  }
  pel_cmd->add_option("--weights", weights)->required();
  pel_cmd->add_option("--trace", trace_out, "per-image selection trace JSON");
  report_cmd->add_option("--weights", weights)->required();
  report_cmd->add_option("--json", json_out, "write the report JSON here");
  for (CLI::App* cmd : {nms_cmd, report_cmd}) {
    cmd->add_option("--nms-iou", nms_iou, "NMS suppression IoU")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSchema;
  }

  try {
    if (*gen) return cmd_gen(gen_seed, out);
    if (*eval) return cmd_eval(common, json_out);
    if (*labels) return cmd_labels(common, features_path, extract, drop_zero, out);
    if (*trn) {
      if (common.gt.empty() != common.dets.empty()) throw InputError("--gt and --det must be given together");
      return cmd_train(dataset_path, config_path, train_seed, out, log_out, common);
    }
    if (*pel_cmd) return cmd_pel(common, weights, trace_out);
    if (*nms_cmd) return cmd_nms(common, nms_iou);
    if (*oracle_cmd) return cmd_oracle(common);
    if (*report_cmd) return cmd_report(common, weights, nms_iou, json_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
