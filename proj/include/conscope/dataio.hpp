#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conscope {

inline constexpr int kSchemaVersion = 1;

enum class Task { BinaryClassification, Regression };
enum class CovariateKind { Continuous, Categorical };
enum class Link { Sigmoid, Identity };

std::string_view to_string(Task task);
std::string_view to_string(CovariateKind kind);
std::string_view to_string(Link link);
std::optional<Task> parse_task(std::string_view text);
std::optional<CovariateKind> parse_covariate_kind(std::string_view text);
std::optional<Link> parse_link(std::string_view text);

struct CovariateDescriptor {
  std::string name;
  CovariateKind kind = CovariateKind::Continuous;
  std::vector<std::string> categories;  // categorical only

  bool operator==(const CovariateDescriptor&) const = default;
};

struct RunMeta {
  int schema_version = kSchemaVersion;
  std::string run_id;
  Task task = Task::BinaryClassification;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::string> checkpoints;
  std::vector<CovariateDescriptor> covariates;

  bool operator==(const RunMeta&) const = default;
};

/// Penultimate-layer activations for one checkpoint; row i is sample i.
struct RepresentationMatrix {
  std::string checkpoint;
  Eigen::MatrixXd values;
};

/// Last linear stage of the model: y_hat = link(h . weights + bias).
struct FinalLayer {
  std::string checkpoint;
  Eigen::VectorXd weights;
  double bias = 0.0;
  Link link = Link::Sigmoid;
};

struct CheckpointData {
  RepresentationMatrix representation;
  FinalLayer final_layer;
};

struct LabelTable {
  Eigen::VectorXd y_true;
  Eigen::VectorXd y_score;  // model output before thresholding (probability for sigmoid links)
};

/// One covariate column. Continuous columns hold the value; categorical
/// columns hold the index into the descriptor's category list. nullopt marks
/// a missing entry.
using CovariateColumn = std::vector<std::optional<double>>;

struct LoadedRun {
  RunMeta meta;
  std::vector<std::string> sample_ids;
  std::vector<CheckpointData> checkpoints;  // same order as meta.checkpoints
  LabelTable labels;
  std::vector<CovariateColumn> covariates;  // same order as meta.covariates

  /// Throws NotFoundError.
  const CheckpointData& checkpoint(std::string_view label) const;
  const CheckpointData& last_checkpoint() const;
  std::size_t covariate_index(std::string_view name) const;
  const CovariateDescriptor& descriptor(std::string_view name) const;
  const CovariateColumn& covariate(std::string_view name) const;
};

bool operator==(const LoadedRun& a, const LoadedRun& b);

struct Violation {
  std::string location;  // file, optionally with row/column
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_text() const;
};

/// Checks every single-table and cross-table invariant. Never throws.
ValidationReport validate_run(const LoadedRun& run);

/// Structural parse of a run directory without invariant checks. Throws
/// LoadError for anything that cannot be represented in a LoadedRun
/// (missing files, malformed JSON/CSV, unknown enums, undeclared category
/// values, misaligned sample ids).
LoadedRun parse_run(const std::filesystem::path& dir);

/// parse_run followed by validate_run; throws LoadError listing every
/// violation when the report is non-empty.
LoadedRun load_run(const std::filesystem::path& dir);

/// Writes the directory layout read by load_run. Throws IoError.
void write_run(const LoadedRun& run, const std::filesystem::path& dir);

/// Returns a copy holding only the given rows (in the given order).
LoadedRun subset_rows(const LoadedRun& run, std::span<const std::size_t> rows);

std::filesystem::path checkpoint_dir(const std::filesystem::path& run_dir, std::string_view label);

}  // namespace conscope
