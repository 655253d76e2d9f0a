#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pel/ensemble.hpp"
#include "pel/synthbench.hpp"

using namespace pel;

namespace {

const Benchmark& standard() {
  static const Benchmark b = standard_benchmark();
  return b;
}

}  // namespace

TEST(Generate, DeterministicPerSeed) {
  const auto a = generate_scenes(50, 7);
  const auto b = generate_scenes(50, 7);
  const auto c = generate_scenes(50, 8);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sample, b[i].sample);
    EXPECT_EQ(a[i].regime, b[i].regime);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= !(a[i].sample == c[i].sample);
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.front().sample.image_id, "img_00000");
  EXPECT_THROW(generate_scenes(0, 1), InputError);
}

TEST(Generate, RegimeProportions) {
  const auto scenes = generate_scenes(1000, 11);
  std::array<int, kNumRegimes> n{};
  for (const auto& s : scenes) ++n[static_cast<std::size_t>(s.regime)];
  for (int c : n) EXPECT_NEAR(c / 1000.0, 1.0 / 3.0, 0.03);
}

TEST(Generate, RegionsInsideExtentAndDisjoint) {
  for (const auto& s : generate_scenes(200, 12)) {
    ASSERT_FALSE(s.sample.regions.empty());
    std::vector<Aabb> boxes;
    for (const Region& r : s.sample.regions) {
      const Aabb b = r.polygon.bounds();
      EXPECT_GE(b.x_min, 0.0);
      EXPECT_GE(b.y_min, 0.0);
      EXPECT_LE(b.x_max, s.sample.width);
      EXPECT_LE(b.y_max, s.sample.height);
      for (const Aabb& o : boxes) EXPECT_FALSE(b.overlaps(o));
      boxes.push_back(b);
    }
  }
}

TEST(Generate, AttributesMatchRegime) {
  for (const auto& s : generate_scenes(300, 13)) {
    const RegionKind expected = s.regime == Regime::kSmallDense        ? RegionKind::kSmall
                                : s.regime == Regime::kLongHorizontal ? RegionKind::kLong
                                                                      : RegionKind::kRotated;
    for (const RegionAttributes& a : attributes_of(s.sample)) EXPECT_EQ(kind_of(a), expected);
  }
}

TEST(Regime, NamesRoundTrip) {
  for (std::size_t i = 0; i < kNumRegimes; ++i) {
    const auto r = static_cast<Regime>(i);
    EXPECT_EQ(parse_regime(to_string(r)), r);
  }
  EXPECT_THROW(parse_regime("sideways"), InputError);
}

TEST(Detector, PerfectAndBlindProfiles) {
  const auto scenes = generate_scenes(40, 14);
  RegionMap gt;
  for (const auto& s : scenes) gt[s.sample.image_id] = s.sample.regions;

  DetectorProfile perfect;
  perfect.name = "perfect";
  for (KindSkill& k : perfect.skills) k = {1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(score_model(simulate_detector(perfect, scenes, 1), gt).dataset.f_score, 1.0);

  DetectorProfile blind;
  for (KindSkill& k : blind.skills) k = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(score_model(simulate_detector(blind, scenes, 1), gt).dataset.f_score, 0.0);

  DetectorProfile bad;
  bad.skills[0].recall = 1.5;
  EXPECT_THROW(simulate_detector(bad, scenes, 1), InputError);
}

TEST(Detector, DeterministicPerSeed) {
  const auto scenes = generate_scenes(30, 15);
  const auto p = standard_profiles()[0];
  EXPECT_EQ(simulate_detector(p, scenes, 3), simulate_detector(p, scenes, 3));
  EXPECT_NE(simulate_detector(p, scenes, 3), simulate_detector(p, scenes, 4));
}

TEST(Standard, SplitIsDisjointAndComplete) {
  const Benchmark& b = standard();
  EXPECT_EQ(b.train_ids.size(), kStandardTrain);
  EXPECT_EQ(b.test_ids.size(), kStandardTest);
  std::set<std::string> all(b.train_ids.begin(), b.train_ids.end());
  for (const auto& id : b.test_ids) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), b.scenes.size());
  EXPECT_TRUE(std::is_sorted(b.test_ids.begin(), b.test_ids.end()));
}

TEST(Standard, ExpertsAreComplementary) {
  const Benchmark& b = standard();
  const SceneSet scenes = scene_set(b.scenes);
  const RegionMap gt = ground_truth_of(scenes);
  std::vector<ModelScore> scores;
  for (const RegionMap& m : b.outputs) scores.push_back(score_model(m, gt));

  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      EXPECT_NEAR(scores[i].dataset.f_score, scores[j].dataset.f_score, 0.05);
    }
  }

  std::array<std::size_t, 3> best_on{}, regime_total{}, expert_wins{};
  for (const SyntheticScene& s : b.scenes) {
    const std::string& id = s.sample.image_id;
    double top = 0.0;
    for (const ModelScore& m : scores) top = std::max(top, m.per_image.at(id).f_score);
    for (std::size_t k = 0; k < 3; ++k) best_on[k] += scores[k].per_image.at(id).f_score >= top;
    const auto r = static_cast<std::size_t>(s.regime);
    ++regime_total[r];
    expert_wins[r] += scores[r].per_image.at(id).f_score >= top;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_GE(best_on[k], b.scenes.size() / 5) << b.profiles[k].name;
    EXPECT_GE(expert_wins[k], regime_total[k] * 8 / 10) << b.profiles[k].name;
  }

  const OracleResult o = oracle_evaluate(b.outputs, gt);
  for (const ModelScore& m : scores) EXPECT_GE(o.dataset.f_score, m.dataset.f_score + 0.03);
}

TEST(Standard, SeedDerivationSeparatesStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}
