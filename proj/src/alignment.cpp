#include "depthforge/alignment.hpp"

#include "depthforge/error.hpp"

#include <Eigen/SVD>

#include <string>

namespace depthforge {

SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale) {
  if (src.size() != dst.size()) throw ParameterError("alignment needs equally sized point sets");
  const std::size_t n = src.size();
  if (n < 3) throw PreconditionError("alignment needs at least 3 point pairs, got " + std::to_string(n));

  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= static_cast<double>(n);
  mu_d /= static_cast<double>(n);

  Mat3 sigma = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 ds = src[i] - mu_s;
    sigma.noalias() += (dst[i] - mu_d) * ds.transpose();
    var_s += ds.squaredNorm();
  }
  sigma /= static_cast<double>(n);
  var_s /= static_cast<double>(n);
  if (!(var_s > 0.0)) throw PreconditionError("alignment source points are coincident");

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (!(d[1] > 1e-12 * d[0])) throw PreconditionError("alignment point sets are collinear");
  Vec3 s = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s[2] = -1.0;
  const Mat3 r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

  SimilarityTransform t;
  t.scale = with_scale ? d.dot(s) / var_s : 1.0;
  t.rotation = Quat(r).normalized();
  t.translation = mu_d - t.scale * (r * mu_s);
  return t;
}

}  // namespace depthforge
