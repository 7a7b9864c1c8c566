#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conscope/dataio.hpp"
#include "conscope/probes.hpp"

namespace conscope {

struct ConScoreOptions {
  std::optional<double> ridge_ols;  // nullopt: default_ols_ridge of the rows used
  double ridge_logistic = kDefaultLogisticRidge;
  std::size_t permutations = 0;  // 0 disables the permutation test
  std::uint64_t seed = 0;
};

struct CategoryScore {
  std::string category;
  double r2 = 0.0;
  double cos_abs = 0.0;
  double score = 0.0;
};

struct ConScoreEntry {
  std::string covariate;
  double r2 = 0.0;
  double cos_abs = 0.0;
  double score = 0.0;  // always r2 * cos_abs
  ProbeKind probe_kind = ProbeKind::Ols;
  std::size_t n_used = 0;
  std::vector<CategoryScore> per_category;  // categorical covariates with more than 2 levels
  std::optional<double> permutation_p;
  std::vector<std::string> warnings;
};

struct ConScoreReport {
  std::string run_id;
  std::string checkpoint;
  double model_fit = 0.0;
  std::vector<ConScoreEntry> entries;  // descending by score
  ConScoreOptions options;
};

struct PermutationResult {
  double p_value = 1.0;
  double observed = 0.0;
  std::size_t n_perm = 0;
  std::size_t at_least_observed = 0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double null_max = 0.0;
};

/// |a.b| / (|a| |b|). Throws DomainError on a length mismatch or a zero-norm vector.
double cosine_alignment(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Con-score of one covariate against the model's final layer:
/// score = R^2 of the covariate probe times |cos| between probe weights and
/// final-layer weights. Rows with a missing covariate value are excluded.
/// Throws DomainError for a covariate with fewer than 2 distinct observed
/// values or a zero-norm final layer.
ConScoreEntry compute_con_score(const Eigen::Ref<const Eigen::MatrixXd>& H, const CovariateDescriptor& covariate,
                                std::span<const std::optional<double>> values, const FinalLayer& final_layer,
                                const ConScoreOptions& options = {});

/// Permutes the covariate column (missing entries travel with it) and
/// recomputes the score. p = (1 + #{null >= observed}) / (n_perm + 1).
/// Replicate r draws from a generator seeded by (seed, r), so the result does
/// not depend on thread scheduling.
PermutationResult permutation_null(const Eigen::Ref<const Eigen::MatrixXd>& H, const CovariateDescriptor& covariate,
                                   std::span<const std::optional<double>> values, const FinalLayer& final_layer,
                                   std::size_t n_perm, std::uint64_t seed, const ConScoreOptions& options = {});

/// Fit of the model's own final layer: MZ pseudo-R^2 of Hw+b for
/// classification, R^2(y_true, Hw+b) for regression.
double model_fit_metric(const LoadedRun& run, const std::string& checkpoint);

/// Empty checkpoint selects the last one; empty selection means every covariate.
/// Throws NotFoundError for unknown names.
ConScoreReport compute_report(const LoadedRun& run, const std::string& checkpoint,
                              const std::vector<std::string>& covariates, const ConScoreOptions& options = {});

/// Canonical JSON text of a report (shared by the CLI and the HTTP API).
std::string report_to_json(const ConScoreReport& report);

/// Fixed-width table for terminals.
std::string report_to_table(const ConScoreReport& report);

}  // namespace conscope
