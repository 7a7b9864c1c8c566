#include "conscope/reduce.hpp"

#include <cmath>

#include "conscope/errors.hpp"

namespace conscope {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Projection pca_fit(const Eigen::Ref<const MatrixXd>& H, Index k) {
  const Index n = H.rows();
  const Index d = H.cols();
  if (n < 2) throw DomainError("pca_fit: at least 2 rows required");
  if (k < 1 || k > d)
    throw DomainError("pca_fit: k=" + std::to_string(k) + " must lie in 1.." + std::to_string(d));
  if (!H.allFinite()) throw DomainError("pca_fit: non-finite values");

  Projection p;
  p.mean = H.colwise().mean().transpose();
  const MatrixXd centred = H.rowwise() - p.mean.transpose();
  const Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const MatrixXd& V = svd.matrixV();

  const double denom = static_cast<double>(n - 1);
  const double total = sv.squaredNorm() / denom;
  p.components.resize(k, d);
  p.explained_variance.resize(k);
  p.explained_ratio.resize(k);
  for (Index i = 0; i < k; ++i) {
    VectorXd axis = V.col(i);
    Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    p.components.row(i) = axis.transpose();
    const double s = i < sv.size() ? sv(i) : 0.0;
    p.explained_variance(i) = s * s / denom;
    p.explained_ratio(i) = total > 0.0 ? p.explained_variance(i) / total : 0.0;
  }
  return p;
}

MatrixXd project_points(const Projection& projection, const Eigen::Ref<const MatrixXd>& H) {
  if (H.cols() != projection.d())
    throw DomainError("project_points: H has " + std::to_string(H.cols()) + " columns, projection expects " +
                      std::to_string(projection.d()));
  return (H.rowwise() - projection.mean.transpose()) * projection.components.transpose();
}

ProjectedDirection project_direction(const Projection& projection, const Eigen::Ref<const VectorXd>& w) {
  if (w.size() != projection.d())
    throw DomainError("project_direction: vector has " + std::to_string(w.size()) + " entries, projection expects " +
                      std::to_string(projection.d()));
  ProjectedDirection out;
  out.approximate = projection.k() < projection.d();
  out.direction = projection.components * w;
  const double norm = out.direction.norm();
  // Relative threshold: rounding leaves ~eps * |w| behind for orthogonal directions.
  if (!(norm > 1e-12 * w.norm())) {
    out.direction.setZero();
    out.zero = true;
  } else {
    out.direction /= norm;
  }
  return out;
}

}  // namespace conscope
