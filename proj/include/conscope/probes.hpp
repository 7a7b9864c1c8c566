#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string_view>

namespace conscope {

enum class ProbeKind { Ols, Logistic };

std::string_view to_string(ProbeKind kind);

/// A fitted linear probe h -> t. Weights are expressed in raw
/// representation coordinates so they can be compared with the model's own
/// final-layer weights.
struct ProbeFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double fit_score = 0.0;  // R^2 (ols) or McKelvey-Zavoina pseudo-R^2 (logistic), in [0,1]
  ProbeKind kind = ProbeKind::Ols;
  int solver_iterations = 0;
  bool converged = false;
};

inline constexpr double kDefaultLogisticRidge = 1e-4;
inline constexpr int kLogisticMaxIterations = 100;
/// Convergence requires ||grad||_inf < kLogisticGradientTolerance * n.
inline constexpr double kLogisticGradientTolerance = 1e-6;

/// 1e-8 * trace(Hc^T Hc) / d with Hc the column-centred H.
double default_ols_ridge(const Eigen::Ref<const Eigen::MatrixXd>& H);

/// Minimises ||t - (Hw + b)||^2 + ridge * ||w||^2 with an unpenalised
/// intercept. When ridge is not given, default_ols_ridge(H) is used.
/// Throws DomainError on non-finite input, shape mismatch, or constant t.
ProbeFit fit_ols_probe(const Eigen::Ref<const Eigen::MatrixXd>& H, const Eigen::Ref<const Eigen::VectorXd>& t,
                       std::optional<double> ridge = std::nullopt);

/// Maximises sum_i [t_i eta_i - log(1 + e^eta_i)] - ridge/2 ||w||^2 with
/// eta = Hw + b by damped Newton iterations. Non-convergence is reported in
/// the result, not thrown. Throws DomainError on non-finite input, shape
/// mismatch, ridge <= 0, targets outside {0,1}, or a single class.
ProbeFit fit_logistic_probe(const Eigen::Ref<const Eigen::MatrixXd>& H, const Eigen::Ref<const Eigen::VectorXd>& t,
                            double ridge = kDefaultLogisticRidge);

/// 1 - SSE/SST clamped to [0,1]. Throws DomainError when t is constant or
/// the lengths differ.
double r_squared(const Eigen::Ref<const Eigen::VectorXd>& t, const Eigen::Ref<const Eigen::VectorXd>& t_hat);

/// Var(eta) / (Var(eta) + pi^2/3) with population variance.
double mz_pseudo_r2(const Eigen::Ref<const Eigen::VectorXd>& linear_predictors);

/// Raw linear predictors Hw + b. Throws DomainError on a width mismatch.
Eigen::VectorXd predict_linear(const ProbeFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& H);

/// Gradient of the penalised logistic log-likelihood at (weights, intercept),
/// intercept component first. Exposed for convergence diagnostics.
Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& H, const Eigen::Ref<const Eigen::VectorXd>& t,
                                  const Eigen::VectorXd& weights, double intercept, double ridge);

}  // namespace conscope
