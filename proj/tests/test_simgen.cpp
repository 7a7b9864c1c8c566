#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "conscope/conscore.hpp"
#include "conscope/errors.hpp"
#include "conscope/simgen.hpp"
#include "support/sims.hpp"

using namespace conscope;
using testsupport::sim;

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

Eigen::VectorXd covariate_vector(const LoadedRun& run, std::string_view name) {
  const auto& col = run.covariate(name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(col.size()));
  for (std::size_t i = 0; i < col.size(); ++i) v(static_cast<Eigen::Index>(i)) = col[i].value();
  return v;
}

ConScoreEntry c_entry(const LoadedRun& run) { return compute_report(run, "", {"c"}).entries.front(); }

// Counts of the (c, y) cells in the order (0,0), (0,1), (1,0), (1,1).
std::array<std::size_t, 4> cells(const LoadedRun& run) {
  std::array<std::size_t, 4> out{};
  const auto c = covariate_vector(run, "c");
  for (Eigen::Index i = 0; i < c.size(); ++i) ++out[static_cast<std::size_t>(2 * c(i) + run.labels.y_true(i))];
  return out;
}

}  // namespace

TEST(Schedule, Values) {
  const double expected[] = {0.0, 0.5, 1.0, 0.5, 0.5, 1.0, 0.5, 0.0};
  for (int id = 1; id <= 8; ++id) EXPECT_EQ(correlation_schedule(id), expected[id - 1]);
  EXPECT_THROW(correlation_schedule(0), DomainError);
  EXPECT_THROW(correlation_schedule(9), DomainError);
  EXPECT_EQ(instance_spec(3, 500, 1).agreement_probability(), 1.0);
  EXPECT_EQ(instance_spec(2, 500, 1).agreement_probability(), 0.75);
}

TEST(Generate, ShapeAndValidity) {
  const auto& b = sim(2);
  EXPECT_EQ(b.run.meta.n, 2000u);
  EXPECT_EQ(b.run.meta.d, 2u);
  EXPECT_EQ(b.run.meta.run_id, "sim-instance-2-n2000-seed0");
  EXPECT_TRUE(validate_run(b.run).ok());
  EXPECT_EQ(b.run.last_checkpoint().final_layer.weights, b.trained_layer.weights);
  EXPECT_TRUE(b.trained_layer.converged);
}

TEST(Generate, InstanceOneIsUncorrelated) {
  const auto& run = sim(1).run;
  EXPECT_LT(std::abs(pearson(covariate_vector(run, "c"), run.labels.y_true)), 0.05);
}

TEST(Generate, InstanceThreeCopiesLabel) {
  const auto& run = sim(3).run;
  EXPECT_EQ(covariate_vector(run, "c"), run.labels.y_true);
}

TEST(Generate, Deterministic) {
  const auto a = generate_instance(4, 300, 11);
  const auto b = generate_instance(4, 300, 11);
  EXPECT_TRUE(a.run == b.run);
  EXPECT_FALSE(a.run == generate_instance(4, 300, 12).run);
}

TEST(Generate, RejectsBadArguments) {
  EXPECT_THROW(generate_instance(0, 2000, 0), DomainError);
  EXPECT_THROW(generate_instance(9, 2000, 0), DomainError);
  EXPECT_THROW(generate_instance(1, 99, 0), DomainError);
}

TEST(Resample, InstanceTwoLosesConfounding) {
  const LoadedRun balanced = resample_deconfound(sim(2).run, "c", 0);
  const auto counts = cells(balanced);
  EXPECT_EQ(counts[0], counts[1]);
  EXPECT_EQ(counts[0], counts[2]);
  EXPECT_EQ(counts[0], counts[3]);
  EXPECT_NEAR(pearson(covariate_vector(balanced, "c"), balanced.labels.y_true), 0.0, 1e-12);
  EXPECT_LT(c_entry(balanced).score, 0.15);
  EXPECT_TRUE(validate_run(balanced).ok());
  // the model under test is unchanged
  EXPECT_EQ(balanced.last_checkpoint().final_layer.weights, sim(2).run.last_checkpoint().final_layer.weights);
}

TEST(Resample, InstanceThreeHasEmptyCells) {
  try {
    resample_deconfound(sim(3).run, "c", 0);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("cannot balance: empty cell"), std::string::npos);
  }
}

TEST(Resample, InstanceOneBarelyChanges) {
  const LoadedRun balanced = resample_deconfound(sim(1).run, "c", 0);
  const auto counts = cells(balanced);
  EXPECT_EQ(counts[0], counts[3]);
  EXPECT_LT(std::abs(c_entry(balanced).score - c_entry(sim(1).run).score), 0.05);
}

TEST(Resample, SampleIdsPreservedAndSeeded) {
  const auto& run = sim(2).run;
  const LoadedRun a = resample_deconfound(run, "c", 3);
  const LoadedRun b = resample_deconfound(run, "c", 3);
  EXPECT_TRUE(a == b);
  for (const auto& id : a.sample_ids) EXPECT_NE(std::find(run.sample_ids.begin(), run.sample_ids.end(), id), run.sample_ids.end());
  EXPECT_THROW(resample_deconfound(run, "noise", 0), DomainError);
  EXPECT_THROW(resample_deconfound(run, "nope", 0), NotFoundError);
}

TEST(Sweep, MonotoneAlignmentInTopRow) {
  const double c1 = c_entry(sim(1).run).cos_abs;
  const double c2 = c_entry(sim(2).run).cos_abs;
  const double c3 = c_entry(sim(3).run).cos_abs;
  EXPECT_LT(c1, c2);
  EXPECT_LT(c2, c3);
}

TEST(Sweep, RowContrast) {
  for (int id = 1; id <= 4; ++id) {
    const double top = c_entry(sim(id).run).r2;
    const double bottom = c_entry(sim(id + 4).run).r2;
    EXPECT_GT(top, 0.8) << id;
    EXPECT_LT(bottom, 0.4) << id + 4;
    EXPECT_GE(top - bottom, 0.3) << id;
  }
}

TEST(Sweep, MaximaAtThreeAndSix) {
  auto argmax = [](int from) {
    int best = from;
    for (int id = from; id < from + 4; ++id)
      if (c_entry(sim(id).run).score > c_entry(sim(best).run).score) best = id;
    return best;
  };
  EXPECT_EQ(argmax(1), 3);
  EXPECT_EQ(argmax(5), 6);
  EXPECT_LT(c_entry(sim(1).run).score, 0.1);
}
