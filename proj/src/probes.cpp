#include "conscope/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conscope/errors.hpp"

namespace conscope {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ProbeKind kind) { return kind == ProbeKind::Ols ? "ols" : "logistic"; }

namespace {

// Newton keeps going past the reported tolerance until the gradient reaches
// this level or stops shrinking.
constexpr double kPolishTolerance = 1e-10;

void check_inputs(const Eigen::Ref<const MatrixXd>& H, const Eigen::Ref<const VectorXd>& t, const char* who) {
  if (H.rows() != t.size())
    throw DomainError(std::string(who) + ": H has " + std::to_string(H.rows()) + " rows but t has " +
                      std::to_string(t.size()) + " entries");
  if (H.rows() < 2) throw DomainError(std::string(who) + ": at least 2 samples required");
  if (H.cols() < 1) throw DomainError(std::string(who) + ": H has no columns");
  if (!H.allFinite()) throw DomainError(std::string(who) + ": H contains non-finite values");
  if (!t.allFinite()) throw DomainError(std::string(who) + ": targets contain non-finite values");
}

// Column centring plus one isotropic scale factor. A single scalar keeps the
// isotropic ridge penalty isotropic, so fits stay rotation-equivariant.
struct Standardized {
  VectorXd mean;
  double scale = 0.0;  // 0 when every column is constant
  MatrixXd Z;
};

Standardized standardize(const Eigen::Ref<const MatrixXd>& H) {
  Standardized s;
  s.mean = H.colwise().mean().transpose();
  s.Z = H.rowwise() - s.mean.transpose();
  s.scale = std::sqrt(s.Z.squaredNorm() / static_cast<double>(H.rows() * H.cols()));
  if (s.scale > 0.0) s.Z /= s.scale;
  return s;
}

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double default_ols_ridge(const Eigen::Ref<const MatrixXd>& H) {
  if (H.cols() == 0 || H.rows() == 0) return 0.0;
  const MatrixXd centred = H.rowwise() - H.colwise().mean();
  return 1e-8 * centred.squaredNorm() / static_cast<double>(H.cols());
}

double r_squared(const Eigen::Ref<const VectorXd>& t, const Eigen::Ref<const VectorXd>& t_hat) {
  if (t.size() != t_hat.size()) throw DomainError("r_squared: length mismatch");
  if (t.size() < 2) throw DomainError("r_squared: at least 2 values required");
  const double mean = t.mean();
  const double sst = (t.array() - mean).square().sum();
  if (!(sst > 0.0)) throw DomainError("r_squared: targets are constant");
  const double sse = (t - t_hat).squaredNorm();
  return std::clamp(1.0 - sse / sst, 0.0, 1.0);
}

double mz_pseudo_r2(const Eigen::Ref<const VectorXd>& eta) {
  if (eta.size() == 0 || (eta.array() == eta(0)).all()) return 0.0;
  const double mean = eta.mean();
  const double var = (eta.array() - mean).square().sum() / static_cast<double>(eta.size());
  if (!(var > 0.0)) return 0.0;
  constexpr double kLogisticErrorVariance = std::numbers::pi * std::numbers::pi / 3.0;
  return var / (var + kLogisticErrorVariance);
}

VectorXd predict_linear(const ProbeFit& fit, const Eigen::Ref<const MatrixXd>& H) {
  if (H.cols() != fit.weights.size())
    throw DomainError("predict_linear: H has " + std::to_string(H.cols()) + " columns, probe has " +
                      std::to_string(fit.weights.size()) + " weights");
  return (H * fit.weights).array() + fit.intercept;
}

ProbeFit fit_ols_probe(const Eigen::Ref<const MatrixXd>& H, const Eigen::Ref<const VectorXd>& t,
                       std::optional<double> ridge) {
  check_inputs(H, t, "fit_ols_probe");
  const double lambda = ridge ? *ridge : default_ols_ridge(H);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("fit_ols_probe: ridge must be finite and >= 0");
  const double t_mean = t.mean();
  const VectorXd tc = t.array() - t_mean;
  if (!(tc.squaredNorm() > 0.0)) throw DomainError("fit_ols_probe: targets are constant");

  const Index n = H.rows();
  const Index d = H.cols();
  const Standardized st = standardize(H);

  ProbeFit fit;
  fit.kind = ProbeKind::Ols;
  fit.solver_iterations = 1;
  fit.weights = VectorXd::Zero(d);
  if (st.scale > 0.0) {
    // min ||tc - Z v||^2 + (lambda / s^2) ||v||^2 as one stacked least-squares problem.
    MatrixXd A(n + d, d);
    A.topRows(n) = st.Z;
    A.bottomRows(d) = MatrixXd::Identity(d, d) * (std::sqrt(lambda) / st.scale);
    VectorXd rhs = VectorXd::Zero(n + d);
    rhs.head(n) = tc;
    const VectorXd v = A.completeOrthogonalDecomposition().solve(rhs);
    fit.weights = v / st.scale;
  }
  fit.intercept = t_mean - st.mean.dot(fit.weights);

  const VectorXd pred = predict_linear(fit, H);
  fit.fit_score = r_squared(t, pred);

  const MatrixXd centred = H.rowwise() - st.mean.transpose();
  const VectorXd normal_residual = centred.transpose() * (t - pred) - lambda * fit.weights;
  const double scale = centred.norm() * tc.norm();
  fit.converged = fit.weights.allFinite() && normal_residual.lpNorm<Eigen::Infinity>() <= 1e-8 * scale;
  return fit;
}

VectorXd logistic_gradient(const Eigen::Ref<const MatrixXd>& H, const Eigen::Ref<const VectorXd>& t,
                           const VectorXd& weights, double intercept, double ridge) {
  const VectorXd eta = (H * weights).array() + intercept;
  VectorXd resid(t.size());
  for (Index i = 0; i < t.size(); ++i) resid(i) = t(i) - sigmoid(eta(i));
  VectorXd g(weights.size() + 1);
  g(0) = resid.sum();
  g.tail(weights.size()) = H.transpose() * resid - ridge * weights;
  return g;
}

ProbeFit fit_logistic_probe(const Eigen::Ref<const MatrixXd>& H, const Eigen::Ref<const VectorXd>& t, double ridge) {
  check_inputs(H, t, "fit_logistic_probe");
  if (!(ridge > 0.0) || !std::isfinite(ridge)) throw DomainError("fit_logistic_probe: ridge must be finite and > 0");
  Index positives = 0;
  for (Index i = 0; i < t.size(); ++i) {
    if (t(i) != 0.0 && t(i) != 1.0) throw DomainError("fit_logistic_probe: targets must be 0 or 1");
    if (t(i) == 1.0) ++positives;
  }
  if (positives == 0 || positives == t.size()) throw DomainError("fit_logistic_probe: targets contain a single class");

  const Index n = H.rows();
  const Index d = H.cols();
  const Standardized st = standardize(H);
  const double s = st.scale > 0.0 ? st.scale : 1.0;
  const double lambda_z = ridge / (s * s);

  // Parameters in standardized space: theta = (intercept, v), eta = theta0 + Z v.
  VectorXd theta = VectorXd::Zero(d + 1);
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  theta(0) = std::log(rate / (1.0 - rate));

  auto objective = [&](const VectorXd& th) {
    const VectorXd eta = (st.Z * th.tail(d)).array() + th(0);
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) ll += t(i) * eta(i) - log1pexp(eta(i));
    return ll - 0.5 * lambda_z * th.tail(d).squaredNorm();
  };
  auto to_raw = [&](const VectorXd& th, VectorXd& w, double& b) {
    w = th.tail(d) / s;
    b = th(0) - st.mean.dot(w);
  };

  const double report_tol = kLogisticGradientTolerance * static_cast<double>(n);
  const double polish_tol = kPolishTolerance * static_cast<double>(n);

  ProbeFit fit;
  fit.kind = ProbeKind::Logistic;
  double f = objective(theta);
  VectorXd p(n);
  VectorXd w;
  double b = 0.0;

  int iter = 0;
  for (; iter < kLogisticMaxIterations; ++iter) {
    to_raw(theta, w, b);
    if (logistic_gradient(H, t, w, b, ridge).lpNorm<Eigen::Infinity>() < polish_tol) break;

    const VectorXd eta = (st.Z * theta.tail(d)).array() + theta(0);
    for (Index i = 0; i < n; ++i) p(i) = sigmoid(eta(i));
    const VectorXd resid = t - p;
    const VectorXd weight = (p.array() * (1.0 - p.array())).matrix();

    VectorXd grad(d + 1);
    grad(0) = resid.sum();
    grad.tail(d) = st.Z.transpose() * resid - lambda_z * theta.tail(d);

    MatrixXd hess(d + 1, d + 1);
    hess(0, 0) = weight.sum();
    const MatrixXd wz = st.Z.array().colwise() * weight.array();
    hess.block(0, 1, 1, d) = wz.colwise().sum();
    hess.block(1, 0, d, 1) = hess.block(0, 1, 1, d).transpose();
    hess.block(1, 1, d, d) = st.Z.transpose() * wz;
    hess.block(1, 1, d, d).diagonal().array() += lambda_z;
    // Saturated probabilities can leave the intercept row without curvature.
    hess(0, 0) += 1e-12 * static_cast<double>(n);

    const Eigen::LDLT<MatrixXd> ldlt(hess);
    VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad / (hess.diagonal().maxCoeff() + 1.0);

    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const VectorXd candidate = theta + scale * step;
      const double fc = objective(candidate);
      if (std::isfinite(fc) && fc >= f - 1e-13 * (1.0 + std::abs(f))) {
        const double change = (scale * step).lpNorm<Eigen::Infinity>();
        theta = candidate;
        f = fc;
        accepted = change > 1e-15 * (1.0 + theta.lpNorm<Eigen::Infinity>());
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      ++iter;
      break;
    }
  }

  to_raw(theta, w, b);
  fit.weights = w;
  fit.intercept = b;
  fit.solver_iterations = iter;
  const double grad_norm = logistic_gradient(H, t, w, b, ridge).lpNorm<Eigen::Infinity>();
  fit.converged = w.allFinite() && std::isfinite(b) && grad_norm < report_tol;
  fit.fit_score = std::clamp(mz_pseudo_r2(predict_linear(fit, H)), 0.0, 1.0);
  return fit;
}

}  // namespace conscope
