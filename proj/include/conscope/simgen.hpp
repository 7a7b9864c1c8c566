#pragma once

#include <cstdint>
#include <string_view>

#include "conscope/dataio.hpp"
#include "conscope/probes.hpp"

namespace conscope {

/// Generation parameters of one simulated instance. Samples follow
///   y ~ Bernoulli(1/2),  c = y with probability (1 + rho) / 2 else 1 - y,
///   h = label_shift (2y - 1) e0 + confounder_shift (2c - 1) e1 + N(0, noise_sd^2 I).
/// Instances 1-4 (top row) encode c strongly; 5-8 (bottom row) weakly.
struct SimInstanceSpec {
  int instance_id = 1;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  double label_shift = 0.0;
  double confounder_shift = 0.0;
  double noise_sd = 0.5;
  double rho = 0.0;

  double agreement_probability() const { return 0.5 * (1.0 + rho); }
};

struct SimBundle {
  SimInstanceSpec spec;
  LoadedRun run;            // d = 2, covariates {c (binary), noise (continuous)}, checkpoint "final"
  ProbeFit trained_layer;   // the logistic fit stored as the run's final layer
};

inline constexpr int kSimInstances = 8;
inline constexpr double kTopRowShift = 1.2;
inline constexpr double kBottomRowShift = 0.2;
inline constexpr double kSimNoiseSd = 0.5;
inline constexpr std::string_view kSimCheckpoint = "final";

/// rho for instances 1..8: (0, .5, 1, .5) then (.5, 1, .5, 0).
/// Throws DomainError for ids outside 1..8.
double correlation_schedule(int instance_id);

SimInstanceSpec instance_spec(int instance_id, std::size_t n, std::uint64_t seed);

/// Deterministic given (instance_id, n, seed). Requires n >= 100.
SimBundle generate_instance(int instance_id, std::size_t n, std::uint64_t seed);

/// Subsamples without replacement so that every (covariate, y) cell holds the
/// size of the smallest cell. Rows with a missing covariate are dropped, the
/// final layers are kept unchanged. Throws DomainError when the covariate is
/// not binary categorical, the task is not binary, or a cell is empty.
LoadedRun resample_deconfound(const LoadedRun& run, std::string_view covariate, std::uint64_t seed);

}  // namespace conscope
