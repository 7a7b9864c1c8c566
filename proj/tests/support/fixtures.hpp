#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "conscope/dataio.hpp"

namespace fixtures {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("conscope_" + tag + "_" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// n=4, d=2, one checkpoint "final", one binary covariate "sex".
inline conscope::LoadedRun minimal_run() {
  using namespace conscope;
  LoadedRun run;
  run.meta.run_id = "minimal";
  run.meta.task = Task::BinaryClassification;
  run.meta.n = 4;
  run.meta.d = 2;
  run.meta.checkpoints = {"final"};
  run.meta.covariates = {{"sex", CovariateKind::Categorical, {"f", "m"}}};
  run.sample_ids = {"a", "b", "c", "d"};
  CheckpointData ck;
  ck.representation.checkpoint = "final";
  ck.representation.values.resize(4, 2);
  ck.representation.values << 0.5, -1.25, 1.0 / 3.0, 2.0, -0.1, 0.7, 1e-9, -3.5;
  ck.final_layer.checkpoint = "final";
  ck.final_layer.weights = Eigen::Vector2d(0.75, -0.2);
  ck.final_layer.bias = 0.1;
  ck.final_layer.link = Link::Sigmoid;
  run.checkpoints.push_back(ck);
  run.labels.y_true = Eigen::Vector4d(0, 1, 0, 1);
  run.labels.y_score = Eigen::Vector4d(0.2, 0.9, 0.4, 0.6);
  run.covariates = {{0.0, 1.0, std::nullopt, 1.0}};
  return run;
}

}  // namespace fixtures
