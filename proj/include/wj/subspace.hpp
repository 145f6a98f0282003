#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wj {

// Linear subspace of R^r held through an orthonormal basis (r x rank).
template <typename Scalar>
struct Subspace {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat basis;

  Subspace() = default;
  explicit Subspace(Eigen::Index ambient) : basis(ambient, 0) {}
  // columns must already be orthonormal
  static Subspace from_orthonormal(Mat b) {
    Subspace s;
    s.basis = std::move(b);
    return s;
  }

  Eigen::Index ambient_dim() const { return basis.rows(); }
  Eigen::Index rank() const { return basis.cols(); }
  bool full() const { return rank() == ambient_dim(); }

  Vec project(const Vec& v) const { return basis * (basis.transpose() * v); }
  Vec reject(const Vec& v) const { return v - project(v); }
};

using Subspaced = Subspace<double>;

// Orthonormal basis of the column span; singular values below eps_rank * sigma_max drop.
template <typename Scalar, typename Derived>
Subspace<Scalar> subspace_span(const Eigen::MatrixBase<Derived>& vectors, Scalar eps_rank = Scalar(1e-8),
                               Scalar abs_floor = Scalar(1e-300)) {
  using Mat = typename Subspace<Scalar>::Mat;
  const Eigen::Index r = vectors.rows();
  if (vectors.cols() == 0) return Subspace<Scalar>(r);
  Eigen::JacobiSVD<Mat> svd(vectors.derived().template cast<Scalar>(), Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const Scalar smax = s.size() ? s(0) : Scalar(0);
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > eps_rank * smax && s(k) > abs_floor) ++k;
  return Subspace<Scalar>::from_orthonormal(svd.matrixU().leftCols(k));
}

template <typename Scalar>
Subspace<Scalar> subspace_sum(const Subspace<Scalar>& A, const Subspace<Scalar>& B, Scalar eps_rank = Scalar(1e-8)) {
  if (A.ambient_dim() != B.ambient_dim()) throw std::invalid_argument("subspace_sum: dimension mismatch");
  typename Subspace<Scalar>::Mat M(A.ambient_dim(), A.rank() + B.rank());
  M << A.basis, B.basis;
  return subspace_span<Scalar>(M, eps_rank);
}

template <typename Scalar>
Subspace<Scalar> complement(const Subspace<Scalar>& A) {
  using Mat = typename Subspace<Scalar>::Mat;
  const Eigen::Index r = A.ambient_dim();
  if (A.rank() == 0) return Subspace<Scalar>::from_orthonormal(Mat::Identity(r, r));
  if (A.rank() == r) return Subspace<Scalar>(r);
  Eigen::JacobiSVD<Mat> svd(A.basis, Eigen::ComputeFullU);
  return Subspace<Scalar>::from_orthonormal(svd.matrixU().rightCols(r - A.rank()));
}

template <typename Scalar>
Subspace<Scalar> subspace_intersect(const Subspace<Scalar>& A, const Subspace<Scalar>& B,
                                    Scalar eps_rank = Scalar(1e-8)) {
  if (A.ambient_dim() != B.ambient_dim()) throw std::invalid_argument("subspace_intersect: dimension mismatch");
  return complement(subspace_sum(complement(A), complement(B), eps_rank));
}

// Principal angles, ascending, min(rank A, rank B) of them.
template <typename Scalar>
std::vector<Scalar> principal_angles(const Subspace<Scalar>& A, const Subspace<Scalar>& B) {
  if (A.ambient_dim() != B.ambient_dim()) throw std::invalid_argument("principal_angles: dimension mismatch");
  std::vector<Scalar> out;
  if (A.rank() == 0 || B.rank() == 0) return out;
  typename Subspace<Scalar>::Mat M = A.basis.transpose() * B.basis;
  Eigen::JacobiSVD<typename Subspace<Scalar>::Mat> svd(M);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    out.push_back(std::acos(std::clamp(svd.singularValues()(i), Scalar(0), Scalar(1))));
  return out;
}

// Largest angle between a unit direction of B and the subspace A; pi/2 when rank B > rank A.
template <typename Scalar>
Scalar containment_angle(const Subspace<Scalar>& A, const Subspace<Scalar>& B) {
  if (B.rank() == 0) return Scalar(0);
  if (A.rank() < B.rank()) return Scalar(M_PI / 2);
  typename Subspace<Scalar>::Mat R = B.basis - A.basis * (A.basis.transpose() * B.basis);
  Eigen::JacobiSVD<typename Subspace<Scalar>::Mat> svd(R);
  return std::asin(std::clamp(svd.singularValues()(0), Scalar(0), Scalar(1)));
}

template <typename Scalar>
bool contains(const Subspace<Scalar>& A, const Subspace<Scalar>& B, Scalar theta) {
  return containment_angle(A, B) < theta;
}

// Equal rank and largest principal angle below theta.
template <typename Scalar>
bool same_subspace(const Subspace<Scalar>& A, const Subspace<Scalar>& B, Scalar theta) {
  if (A.rank() != B.rank()) return false;
  auto ang = principal_angles(A, B);
  return ang.empty() || ang.back() < theta;
}

template <typename Scalar>
Scalar max_principal_angle(const Subspace<Scalar>& A, const Subspace<Scalar>& B) {
  if (A.rank() != B.rank()) return Scalar(M_PI / 2);
  auto ang = principal_angles(A, B);
  return ang.empty() ? Scalar(0) : ang.back();
}

// Directions of A whose angle to B is below theta (principal vectors of A).
template <typename Scalar>
Subspace<Scalar> persistent_part(const Subspace<Scalar>& A, const Subspace<Scalar>& B, Scalar theta) {
  using Mat = typename Subspace<Scalar>::Mat;
  if (A.rank() == 0 || B.rank() == 0) return Subspace<Scalar>(A.ambient_dim());
  Mat M = A.basis.transpose() * B.basis;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
  const Scalar c = std::cos(theta);
  Eigen::Index k = 0;
  while (k < svd.singularValues().size() && svd.singularValues()(k) > c) ++k;
  return Subspace<Scalar>::from_orthonormal(A.basis * svd.matrixU().leftCols(k));
}

template <typename Scalar>
struct ScaledSubspace {
  Scalar scale;
  Subspace<Scalar> space;
};

template <typename Scalar>
struct LimitResult {
  Subspace<Scalar> space;
  bool converged = false;
  Scalar drift = 0;
};

// Numerical limit of subspaces along decreasing scales (given coarse to fine):
// the directions of the finest subspace lying within theta_persist of each of
// the two next finer-scale subspaces. Converged iff the three finest agree to theta_tol.
template <typename Scalar>
LimitResult<Scalar> subspace_limit(const std::vector<ScaledSubspace<Scalar>>& seq, Scalar theta_tol = Scalar(1e-3),
                                   Scalar theta_persist = Scalar(0.3)) {
  if (seq.size() < 3) throw std::invalid_argument("subspace_limit: need at least 3 scales");
  for (std::size_t i = 1; i < seq.size(); ++i)
    if (!(seq[i].scale < seq[i - 1].scale)) throw std::invalid_argument("subspace_limit: scales must decrease");
  const std::size_t m = seq.size();
  const auto& A = seq[m - 3].space;
  const auto& B = seq[m - 2].space;
  const auto& C = seq[m - 1].space;
  LimitResult<Scalar> r;
  r.space = persistent_part(persistent_part(C, B, theta_persist), A, theta_persist);
  r.drift = std::max(max_principal_angle(A, B), max_principal_angle(B, C));
  r.converged = r.drift < theta_tol;
  return r;
}

}  // namespace wj
