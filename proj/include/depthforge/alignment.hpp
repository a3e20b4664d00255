#pragma once

#include "depthforge/types.hpp"

#include <span>

namespace depthforge {

/// Least-squares similarity (Umeyama 1991) minimising
/// sum ||s R src_i + t - dst_i||^2. With `with_scale` false the scale is
/// fixed to 1 (Kabsch). Throws PreconditionError for fewer than 3 pairs or
/// a collinear/coincident source set.
SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale);

inline SimilarityTransform rigid_fit(std::span<const Vec3> src, std::span<const Vec3> dst) {
  return umeyama(src, dst, false);
}

}  // namespace depthforge
