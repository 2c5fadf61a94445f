#include "tcal/geometry.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "tcal/errors.hpp"

namespace tcal {

Homography Homography::inverse() const {
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12)) throw DegenerateHomography("matrix not invertible");
  Homography out;
  out.m = m.inverse();
  if (std::abs(out.m(2, 2)) > 1e-12) out.m /= out.m(2, 2);
  return out;
}

namespace {

// Hartley similarity normalisation: centroid to origin, mean radius sqrt(2).
Mat3 normalising_transform(const std::vector<Point2>& pts) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t = Mat3::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

Homography dlt(const std::vector<Point2>& src, const std::vector<Point2>& dst) {
  const size_t n = src.size();
  const Mat3 ts = normalising_transform(src);
  const Mat3 td = normalising_transform(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Point2 s{ts(0, 0) * src[i].x() + ts(0, 2), ts(1, 1) * src[i].y() + ts(1, 2)};
    const Point2 d{td(0, 0) * dst[i].x() + td(0, 2), td(1, 1) * dst[i].y() + td(1, 2)};
    a.row(2 * i) << -s.x(), -s.y(), -1, 0, 0, 0, d.x() * s.x(), d.x() * s.y(), d.x();
    a.row(2 * i + 1) << 0, 0, 0, -s.x(), -s.y(), -1, d.y() * s.x(), d.y() * s.y(), d.y();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Mat3 m = td.inverse() * hn * ts;
  if (std::abs(m(2, 2)) < 1e-12) throw DegenerateHomography("vanishing scale element");
  m /= m(2, 2);
  if (!(std::abs(m.determinant()) > 1e-12)) throw DegenerateHomography("singular estimate");
  Homography out;
  out.m = m;
  return out;
}

double triangle_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

// Smallest triangle area over all vertex triples, relative to the quad scale.
double min_relative_triple_area(const std::array<Point2, 4>& q) {
  double scale2 = 0.0;
  for (int i = 0; i < 4; ++i) scale2 = std::max(scale2, (q[i] - q[(i + 1) % 4]).squaredNorm());
  double min_area = std::numeric_limits<double>::infinity();
  for (int skip = 0; skip < 4; ++skip) {
    Point2 tri[3];
    int k = 0;
    for (int i = 0; i < 4; ++i)
      if (i != skip) tri[k++] = q[i];
    min_area = std::min(min_area, triangle_area(tri[0], tri[1], tri[2]));
  }
  return scale2 > 0.0 ? min_area / scale2 : 0.0;
}

}  // namespace

Homography homography_from_quad(const std::array<Point2, 4>& src,
                                const std::array<Point2, 4>& dst) {
  if (min_relative_triple_area(src) < 1e-6 || min_relative_triple_area(dst) < 1e-6)
    throw DegenerateQuad("three vertices (near-)collinear");
  return dlt({src.begin(), src.end()}, {dst.begin(), dst.end()});
}

Homography homography_from_points(const std::vector<Point2>& src,
                                  const std::vector<Point2>& dst) {
  if (src.size() != dst.size()) throw ValidationError("homography: size mismatch");
  if (src.size() < 4) throw DegeneratePoints("homography needs >= 4 correspondences");
  return dlt(src, dst);
}

}  // namespace tcal
