#include "conscope/conscore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "conscope/errors.hpp"

namespace conscope {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double cosine_alignment(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() != b.size()) throw DomainError("cosine_alignment: vectors differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("cosine_alignment: zero-norm vector");
  return std::clamp(std::abs(a.dot(b)) / (na * nb), 0.0, 1.0);
}

namespace {

struct ProbeOutcome {
  double r2 = 0.0;
  double cos_abs = 0.0;
  std::vector<std::string> warnings;
};

ProbeOutcome score_probe(const ProbeFit& fit, const VectorXd& layer_weights, const std::string& label) {
  ProbeOutcome out;
  out.r2 = fit.fit_score;
  if (fit.kind == ProbeKind::Logistic && !fit.converged)
    out.warnings.push_back(label + ": logistic probe did not converge in " + std::to_string(fit.solver_iterations) +
                           " iterations");
  if (!(fit.weights.norm() > 0.0)) {
    out.warnings.push_back(label + ": degenerate probe (zero weights); cos and score set to 0");
    out.cos_abs = 0.0;
  } else {
    out.cos_abs = cosine_alignment(fit.weights, layer_weights);
  }
  return out;
}

}  // namespace

ConScoreEntry compute_con_score(const Eigen::Ref<const MatrixXd>& H, const CovariateDescriptor& covariate,
                                std::span<const std::optional<double>> values, const FinalLayer& final_layer,
                                const ConScoreOptions& options) {
  if (static_cast<Index>(values.size()) != H.rows())
    throw DomainError("covariate '" + covariate.name + "' has " + std::to_string(values.size()) + " values, H has " +
                      std::to_string(H.rows()) + " rows");
  if (final_layer.weights.size() != H.cols())
    throw DomainError("final layer has " + std::to_string(final_layer.weights.size()) + " weights, H has " +
                      std::to_string(H.cols()) + " columns");
  if (!(final_layer.weights.norm() > 0.0)) throw DomainError("final layer weights have zero norm");

  std::vector<Index> rows;
  std::set<double> distinct;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    rows.push_back(static_cast<Index>(i));
    distinct.insert(*values[i]);
  }
  if (distinct.size() < 2)
    throw DomainError("covariate '" + covariate.name + "' has fewer than 2 distinct observed values");

  const Index m = static_cast<Index>(rows.size());
  const MatrixXd Hu = H(rows, Eigen::all);
  VectorXd target(m);
  for (Index r = 0; r < m; ++r) target(r) = *values[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];

  ConScoreEntry entry;
  entry.covariate = covariate.name;
  entry.n_used = rows.size();

  if (covariate.kind == CovariateKind::Continuous) {
    entry.probe_kind = ProbeKind::Ols;
    const auto outcome = score_probe(fit_ols_probe(Hu, target, options.ridge_ols), final_layer.weights, covariate.name);
    entry.r2 = outcome.r2;
    entry.cos_abs = outcome.cos_abs;
    entry.warnings = outcome.warnings;
  } else if (covariate.categories.size() <= 2) {
    entry.probe_kind = ProbeKind::Logistic;
    const auto outcome =
        score_probe(fit_logistic_probe(Hu, target, options.ridge_logistic), final_layer.weights, covariate.name);
    entry.r2 = outcome.r2;
    entry.cos_abs = outcome.cos_abs;
    entry.warnings = outcome.warnings;
  } else {
    // One-vs-rest; the headline is the category with the largest score.
    entry.probe_kind = ProbeKind::Logistic;
    bool have_headline = false;
    for (std::size_t k = 0; k < covariate.categories.size(); ++k) {
      const std::string label = covariate.name + "=" + covariate.categories[k];
      const VectorXd indicator = (target.array() == static_cast<double>(k)).cast<double>();
      const double positives = indicator.sum();
      CategoryScore cat;
      cat.category = covariate.categories[k];
      if (positives == 0.0 || positives == static_cast<double>(m)) {
        entry.warnings.push_back(label + ": category not separable from the rest (absent or universal); scored 0");
      } else {
        const auto outcome =
            score_probe(fit_logistic_probe(Hu, indicator, options.ridge_logistic), final_layer.weights, label);
        cat.r2 = outcome.r2;
        cat.cos_abs = outcome.cos_abs;
        cat.score = cat.r2 * cat.cos_abs;
        entry.warnings.insert(entry.warnings.end(), outcome.warnings.begin(), outcome.warnings.end());
      }
      if (!have_headline || cat.score > entry.score) {
        entry.r2 = cat.r2;
        entry.cos_abs = cat.cos_abs;
        entry.score = cat.score;
        have_headline = true;
      }
      entry.per_category.push_back(std::move(cat));
    }
  }
  entry.score = entry.r2 * entry.cos_abs;
  return entry;
}

PermutationResult permutation_null(const Eigen::Ref<const MatrixXd>& H, const CovariateDescriptor& covariate,
                                   std::span<const std::optional<double>> values, const FinalLayer& final_layer,
                                   std::size_t n_perm, std::uint64_t seed, const ConScoreOptions& options) {
  if (n_perm == 0) throw DomainError("permutation_null: n_perm must be at least 1");
  PermutationResult result;
  result.n_perm = n_perm;
  result.observed = compute_con_score(H, covariate, values, final_layer, options).score;

  const MatrixXd Hcopy = H;
  const std::vector<std::optional<double>> original(values.begin(), values.end());
  std::vector<double> null_scores(n_perm, 0.0);

  auto replicate = [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(static_cast<std::uint64_t>(r) >> 32)};
    std::mt19937_64 rng(seq);
    auto shuffled = original;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    null_scores[r] = compute_con_score(Hcopy, covariate, shuffled, final_layer, options).score;
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::min<std::size_t>(n_perm, 16));
  if (workers == 1) {
    for (std::size_t r = 0; r < n_perm; ++r) replicate(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t r = next++; r < n_perm; r = next++) {
            try {
              replicate(r);
            } catch (...) {
              if (!failed.exchange(true)) failure = std::current_exception();
              return;
            }
          }
        });
    }
    if (failure) std::rethrow_exception(failure);
  }

  double sum = 0.0, sumsq = 0.0;
  result.null_max = null_scores.front();
  for (double s : null_scores) {
    if (s >= result.observed) ++result.at_least_observed;
    sum += s;
    sumsq += s * s;
    result.null_max = std::max(result.null_max, s);
  }
  const double k = static_cast<double>(n_perm);
  result.null_mean = sum / k;
  result.null_sd = std::sqrt(std::max(0.0, sumsq / k - result.null_mean * result.null_mean));
  result.p_value = (1.0 + static_cast<double>(result.at_least_observed)) / (k + 1.0);
  return result;
}

double model_fit_metric(const LoadedRun& run, const std::string& checkpoint) {
  const auto& ckpt = checkpoint.empty() ? run.last_checkpoint() : run.checkpoint(checkpoint);
  const auto& layer = ckpt.final_layer;
  const VectorXd eta = (ckpt.representation.values * layer.weights).array() + layer.bias;
  if (run.meta.task == Task::BinaryClassification) return mz_pseudo_r2(eta);
  return r_squared(run.labels.y_true, eta);
}

ConScoreReport compute_report(const LoadedRun& run, const std::string& checkpoint,
                              const std::vector<std::string>& covariates, const ConScoreOptions& options) {
  const auto& ckpt = checkpoint.empty() ? run.last_checkpoint() : run.checkpoint(checkpoint);
  std::vector<std::size_t> selected;
  if (covariates.empty()) {
    for (std::size_t k = 0; k < run.meta.covariates.size(); ++k) selected.push_back(k);
  } else {
    for (const auto& name : covariates) selected.push_back(run.covariate_index(name));
  }

  ConScoreReport report;
  report.run_id = run.meta.run_id;
  report.checkpoint = ckpt.representation.checkpoint;
  report.options = options;
  report.model_fit = model_fit_metric(run, report.checkpoint);

  const auto& H = ckpt.representation.values;
  for (std::size_t k : selected) {
    const auto& desc = run.meta.covariates[k];
    const auto& column = run.covariates[k];
    ConScoreEntry entry = compute_con_score(H, desc, column, ckpt.final_layer, options);
    if (options.permutations > 0)
      entry.permutation_p =
          permutation_null(H, desc, column, ckpt.final_layer, options.permutations, options.seed, options).p_value;
    report.entries.push_back(std::move(entry));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const ConScoreEntry& a, const ConScoreEntry& b) { return a.score > b.score; });
  return report;
}

std::string report_to_json(const ConScoreReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["run_id"] = report.run_id;
  j["checkpoint"] = report.checkpoint;
  j["model_fit"] = report.model_fit;
  ordered_json opts;
  opts["ridge_ols"] = report.options.ridge_ols ? ordered_json(*report.options.ridge_ols) : ordered_json(nullptr);
  opts["ridge_logistic"] = report.options.ridge_logistic;
  opts["permutations"] = report.options.permutations;
  opts["seed"] = report.options.seed;
  j["options"] = std::move(opts);
  j["entries"] = ordered_json::array();
  for (const auto& e : report.entries) {
    ordered_json je;
    je["covariate"] = e.covariate;
    je["r2"] = e.r2;
    je["cos_abs"] = e.cos_abs;
    je["score"] = e.score;
    je["probe_kind"] = to_string(e.probe_kind);
    je["n_used"] = e.n_used;
    if (!e.per_category.empty()) {
      je["per_category"] = ordered_json::array();
      for (const auto& c : e.per_category)
        je["per_category"].push_back({{"category", c.category}, {"r2", c.r2}, {"cos_abs", c.cos_abs}, {"score", c.score}});
    }
    if (e.permutation_p) je["permutation_p"] = *e.permutation_p;
    if (!e.warnings.empty()) je["warnings"] = e.warnings;
    j["entries"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

std::string report_to_table(const ConScoreReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "run %s  checkpoint %s  model fit %.4f\n", report.run_id.c_str(),
                report.checkpoint.c_str(), report.model_fit);
  out += line;
  std::size_t width = 9;
  for (const auto& e : report.entries) width = std::max(width, e.covariate.size());
  std::snprintf(line, sizeof line, "%-*s  %-8s  %7s  %7s  %7s  %9s  %7s\n", static_cast<int>(width), "covariate",
                "probe", "n_used", "r2", "|cos|", "con-score", "perm_p");
  out += line;
  for (const auto& e : report.entries) {
    std::string p = e.permutation_p ? std::to_string(*e.permutation_p).substr(0, 6) : "-";
    std::snprintf(line, sizeof line, "%-*s  %-8s  %7zu  %7.4f  %7.4f  %9.4f  %7s\n", static_cast<int>(width),
                  e.covariate.c_str(), std::string(to_string(e.probe_kind)).c_str(), e.n_used, e.r2, e.cos_abs,
                  e.score, p.c_str());
    out += line;
  }
  return out;
}

}  // namespace conscope
