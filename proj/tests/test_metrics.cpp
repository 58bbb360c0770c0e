#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/LU>

#include "domslam/errors.hpp"
#include "domslam/metrics.hpp"
#include "test_util.hpp"

namespace domslam {
namespace {

using testing::random_pose;

Snapshot random_snapshot(std::mt19937_64& rng, int poses, int points) {
  Snapshot s;
  for (int k = 0; k < poses; ++k) s.poses[k] = random_pose(rng, 3.0, 5.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int i = 0; i < points; ++i) {
    s.landmarks[{i, i % 3 == 0 ? -1 : i}] = Point3(normal(rng), normal(rng), normal(rng));
  }
  return s;
}

Snapshot perturb(const Snapshot& s, std::mt19937_64& rng) {
  Snapshot out = s;
  for (auto& [k, p] : out.poses) p = p * random_pose(rng, 0.2, 0.2);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (auto& [key, l] : out.landmarks) l += Vector3(normal(rng), normal(rng), normal(rng));
  return out;
}

TEST(Evaluate, IdenticalSnapshotsGiveZeros) {
  std::mt19937_64 rng(1);
  const Snapshot s = random_snapshot(rng, 10, 12);
  const MetricsReport r = evaluate(s, s);
  for (double v : metric_values(r)) EXPECT_NEAR(v, 0.0, 1e-6);
  EXPECT_EQ(r.poses, 10u);
  EXPECT_EQ(r.landmarks, 12u);
  EXPECT_EQ(r.pose_pairs, 90u);
  EXPECT_FALSE(r.pairs_subsampled);
}

TEST(Evaluate, GlobalTranslationShowsOnlyInAbsoluteMetrics) {
  std::mt19937_64 rng(2);
  const Snapshot truth = random_snapshot(rng, 8, 9);
  const Vector3 t(0.3, -1.2, 2.0);
  Snapshot est = truth;
  for (auto& [k, p] : est.poses) p = Pose::from_translation(t) * p;
  for (auto& [key, l] : est.landmarks) l += t;
  const MetricsReport r = evaluate(est, truth);
  EXPECT_NEAR(r.ate, t.norm(), 1e-12);
  EXPECT_NEAR(r.ase, t.norm(), 1e-12);
  EXPECT_NEAR(r.are, 0.0, 1e-6);
  EXPECT_NEAR(r.all_rte, 0.0, 1e-9);
  EXPECT_NEAR(r.all_rse, 0.0, 1e-9);
}

TEST(Evaluate, RotatingOnePoseByTenDegrees) {
  Snapshot truth;
  truth.poses[0] = Pose();
  truth.poses[1] = Pose::from_translation(Vector3(1, 0, 0));
  Snapshot est = truth;
  est.poses[1] = Pose(so3_exp(Vector3(0, 0, 10.0 * std::numbers::pi / 180.0)), Vector3(1, 0, 0));
  const MetricsReport r = evaluate(est, truth);
  EXPECT_NEAR(r.are, std::sqrt((0.0 + 100.0) / 2.0), 1e-9);
  EXPECT_NEAR(r.are, 7.0711, 5e-5);
  EXPECT_NEAR(r.ate, 0.0, 1e-15);
  EXPECT_NEAR(r.all_rre, 10.0, 1e-9);
  // Pair (1,0): rotating pose 1 moves the relative translation of pose 0.
  const double chord = 2.0 * std::sin(5.0 * std::numbers::pi / 180.0);
  EXPECT_NEAR(r.all_rte, std::sqrt((0.0 + chord * chord) / 2.0), 1e-12);
}

TEST(Evaluate, RelativeMetricsAreInvariantUnderRigidTransform) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Snapshot truth = random_snapshot(rng, 15, 20);
    const Snapshot est = perturb(truth, rng);
    const Pose g = random_pose(rng, 3.0, 50.0);
    Snapshot moved = est;
    for (auto& [k, p] : moved.poses) p = g * p;
    for (auto& [key, l] : moved.landmarks) l = g * l;
    const MetricsReport a = evaluate(est, truth);
    const MetricsReport b = evaluate(moved, truth);
    EXPECT_NEAR(a.all_rte, b.all_rte, 1e-9);
    EXPECT_NEAR(a.all_rre, b.all_rre, 1e-9);
  }
}

TEST(Evaluate, StructurePairsAreTranslationInvariantOnly) {
  std::mt19937_64 rng(8);
  const Snapshot truth = random_snapshot(rng, 4, 20);
  const Snapshot est = perturb(truth, rng);
  Snapshot shifted = est;
  for (auto& [key, l] : shifted.landmarks) l += Vector3(40.0, -7.0, 3.0);
  EXPECT_NEAR(evaluate(shifted, truth).all_rse, evaluate(est, truth).all_rse, 1e-9);
  // Pair differences are compared in the world frame, so a rotation of the
  // whole map shows up in the metric.
  Snapshot rotated = est;
  for (auto& [key, l] : rotated.landmarks) l = so3_exp(Vector3(0.0, 0.0, 0.5)) * l;
  EXPECT_GT(evaluate(rotated, truth).all_rse, evaluate(est, truth).all_rse);
}

TEST(Evaluate, AllPairsStructureMatchesBruteForce) {
  std::mt19937_64 rng(4);
  const Snapshot truth = random_snapshot(rng, 3, 40);
  const Snapshot est = perturb(truth, rng);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [ka, ea] : est.landmarks) {
    for (const auto& [kb, eb] : est.landmarks) {
      if (ka == kb) continue;
      sum += ((ea - eb) - (truth.landmarks.at(ka) - truth.landmarks.at(kb))).squaredNorm();
      ++count;
    }
  }
  EXPECT_NEAR(evaluate(est, truth).all_rse, std::sqrt(sum / static_cast<double>(count)), 1e-12);
}

TEST(Evaluate, AllPairsPosesMatchBruteForce) {
  std::mt19937_64 rng(5);
  const Snapshot truth = random_snapshot(rng, 12, 2);
  const Snapshot est = perturb(truth, rng);
  double t_sum = 0.0;
  double r_sum = 0.0;
  for (const auto& [a, ea] : est.poses) {
    for (const auto& [b, eb] : est.poses) {
      if (a == b) continue;
      const Eigen::Matrix4d e = (truth.poses.at(a).inverse() * truth.poses.at(b)).matrix().inverse() *
                                (ea.inverse() * eb).matrix();
      t_sum += e.block<3, 1>(0, 3).squaredNorm();
      const double c = std::clamp((e.block<3, 3>(0, 0).trace() - 1.0) / 2.0, -1.0, 1.0);
      const double deg = std::acos(c) * 180.0 / std::numbers::pi;
      r_sum += deg * deg;
    }
  }
  const MetricsReport r = evaluate(est, truth);
  EXPECT_NEAR(r.all_rte, std::sqrt(t_sum / 132.0), 1e-9);
  EXPECT_NEAR(r.all_rre, std::sqrt(r_sum / 132.0), 1e-6);
}

TEST(Evaluate, SubsamplesLargeTrajectoriesDeterministically) {
  std::mt19937_64 rng(6);
  const Snapshot truth = random_snapshot(rng, 60, 2);
  const Snapshot est = perturb(truth, rng);
  MetricsOptions options;
  options.max_all_pairs_poses = 50;
  options.subsample_pairs = 200000;
  options.seed = 9;
  const MetricsReport sub = evaluate(est, truth, options);
  EXPECT_TRUE(sub.pairs_subsampled);
  EXPECT_EQ(sub.pose_pairs, 200000u);
  const MetricsReport full = evaluate(est, truth);
  EXPECT_NEAR(sub.all_rte, full.all_rte, 0.02 * full.all_rte);
  EXPECT_EQ(evaluate(est, truth, options).all_rte, sub.all_rte);
}

TEST(Evaluate, AbsoluteMetricsIgnoreIdLabels) {
  std::mt19937_64 rng(7);
  const Snapshot truth = random_snapshot(rng, 10, 10);
  const Snapshot est = perturb(truth, rng);
  Snapshot truth2;
  Snapshot est2;
  for (const auto& [k, p] : truth.poses) truth2.poses[100 - k] = p;
  for (const auto& [k, p] : est.poses) est2.poses[100 - k] = p;
  for (const auto& [key, l] : truth.landmarks) truth2.landmarks[{-key.first, key.second}] = l;
  for (const auto& [key, l] : est.landmarks) est2.landmarks[{-key.first, key.second}] = l;
  const MetricsReport a = evaluate(est, truth);
  const MetricsReport b = evaluate(est2, truth2);
  EXPECT_NEAR(a.ate, b.ate, 1e-12);
  EXPECT_NEAR(a.ase, b.ase, 1e-12);
  EXPECT_NEAR(a.all_rte, b.all_rte, 1e-12);
}

TEST(Evaluate, AddingAPerfectPoseLowersTheRmse) {
  Snapshot truth;
  truth.poses[0] = Pose();
  Snapshot est;
  est.poses[0] = Pose::from_translation(Vector3(0.3, 0.4, 0.0));
  EXPECT_NEAR(evaluate(est, truth).ate, 0.5, 1e-15);
  truth.poses[1] = Pose::from_translation(Vector3(1, 2, 3));
  est.poses[1] = truth.poses[1];
  EXPECT_NEAR(evaluate(est, truth).ate, 0.5 / std::sqrt(2.0), 1e-15);
}

TEST(Evaluate, MissingIdsAreErrors) {
  Snapshot truth;
  truth.poses[0] = Pose();
  Snapshot est = truth;
  est.poses[1] = Pose();
  EXPECT_THROW(evaluate(est, truth), MetricsError);
  EXPECT_THROW(evaluate(Snapshot{}, truth), MetricsError);
  est = truth;
  est.landmarks[{3, 2}] = Point3::Zero();
  EXPECT_THROW(evaluate(est, truth), MetricsError);
}

TEST(Compare, ImprovementPercentages) {
  EXPECT_NEAR(improvement_percent(0.342, 0.203), 40.6, 0.05);
  // Published errors are rounded to 1e-3, so the published percentage only
  // has to fall inside the range those roundings allow.
  const double lo = improvement_percent(0.5455, 0.1425);
  const double hi = improvement_percent(0.5465, 0.1415);
  EXPECT_GE(73.9, lo);
  EXPECT_LE(73.9, hi);
  EXPECT_GE(improvement_percent(0.546, 0.142), lo);
  EXPECT_LE(improvement_percent(0.546, 0.142), hi);
  EXPECT_DOUBLE_EQ(improvement_percent(2.0, 3.0), -50.0);
  bool zero = false;
  EXPECT_EQ(improvement_percent(0.0, 1.0, &zero), 0.0);
  EXPECT_TRUE(zero);
}

TEST(Compare, RowsInFixedOrder) {
  MetricsReport without;
  without.ate = 0.342;
  without.ase = 0.546;
  MetricsReport with;
  with.ate = 0.203;
  with.ase = 0.142;
  const auto rows = compare(without, with);
  ASSERT_EQ(rows.size(), 6u);
  const std::vector<std::string> names = {"ATE", "ARE", "ASE", "allRTE", "allRRE", "allRSE"};
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].metric, names[i]);
  EXPECT_NEAR(rows[0].improvement_pct, 40.6, 0.05);
  EXPECT_NEAR(rows[2].improvement_pct, (0.546 - 0.142) / 0.546 * 100.0, 1e-12);
  EXPECT_TRUE(rows[1].zero_baseline);
  EXPECT_FALSE(rows[0].zero_baseline);
  for (const auto& row : compare(without, without)) EXPECT_EQ(row.improvement_pct, 0.0);
}

TEST(Median, OddEvenAndEmpty) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), MetricsError);
}

TEST(Csv, HeadersAndRows) {
  MetricsReport r;
  r.ate = 0.5;
  r.poses = 3;
  std::ostringstream metrics;
  write_metrics_csv(metrics, r);
  EXPECT_EQ(metrics.str(), "ATE,ARE,ASE,allRTE,allRRE,allRSE,poses,landmarks,pose_pairs,pairs_subsampled\n"
                           "0.5,0,0,0,0,0,3,0,0,0\n");
  std::ostringstream table;
  write_comparison_csv(table, {{"7", compare(r, r)}});
  std::istringstream lines(table.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "seed,metric,without_dom,with_dom,improvement_pct,zero_baseline");
  std::string first;
  std::getline(lines, first);
  EXPECT_EQ(first, "7,ATE,0.5,0.5,0,0");
}

}  // namespace
}  // namespace domslam
