#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

namespace tcal {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Plane-to-plane projective map. `m` acts on homogeneous pixel coordinates
// and is kept normalised to m(2,2) = 1 by the constructors in homography.cpp.
struct Homography {
  Mat3 m = Mat3::Identity();

  Point2 apply(const Point2& p) const {
    const double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
    return {(m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / w,
            (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / w};
  }

  Homography inverse() const;
  static Homography identity() { return {}; }
};

// Normalised-DLT estimate from exactly four correspondences. Rejects quads
// with any three (near-)collinear vertices.
Homography homography_from_quad(const std::array<Point2, 4>& src,
                                const std::array<Point2, 4>& dst);

// Normalised-DLT estimate from n >= 4 correspondences (least squares for n > 4).
Homography homography_from_points(const std::vector<Point2>& src,
                                  const std::vector<Point2>& dst);

}  // namespace tcal
