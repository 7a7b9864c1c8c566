#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace conscope {

/// Exact PCA basis. Rows of `components` are orthonormal principal axes in
/// descending variance order; the largest-magnitude entry of each row is
/// positive.
struct Projection {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x d
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_ratio;

  Eigen::Index k() const { return components.rows(); }
  Eigen::Index d() const { return components.cols(); }
};

struct ProjectedDirection {
  Eigen::VectorXd direction;  // unit length, or zero
  bool zero = false;
  bool approximate = false;  // k < d: a d-dim hyperplane is not faithfully drawable in k dims
};

struct ProjectedView {
  std::string checkpoint;
  Eigen::MatrixXd coords;  // n x k
  ProjectedDirection boundary_normal;
  Eigen::VectorXd explained_ratio;
};

/// Throws DomainError when k is outside 1..d, n < 2, or H is non-finite.
Projection pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& H, Eigen::Index k);

/// (H - mean) C^T. Throws DomainError on a width mismatch.
Eigen::MatrixXd project_points(const Projection& projection, const Eigen::Ref<const Eigen::MatrixXd>& H);

/// C w normalised to unit length. A direction orthogonal to every component
/// comes back as the zero vector with `zero` set.
ProjectedDirection project_direction(const Projection& projection, const Eigen::Ref<const Eigen::VectorXd>& w);

}  // namespace conscope
