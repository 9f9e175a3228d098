#include "jlm/rotmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "jlm/errors.hpp"

namespace jlm::rotmath {
namespace {

struct GramSchmidt {
  Vec3 a1, a2;
  double n1 = 0, nu = 0;
  Vec3 b1, b2, b3;
};

GramSchmidt gram_schmidt(const Rot6D& r) {
  GramSchmidt gs;
  gs.a1 = r.a1();
  gs.a2 = r.a2();
  for (double x : r.v) {
    if (!std::isfinite(x)) throw DegenerateInput("6D input is not finite");
  }
  gs.n1 = gs.a1.norm();
  if (gs.n1 < kDegenerateTol) {
    throw DegenerateInput("first 6D column has norm below 1e-8");
  }
  gs.b1 = gs.a1 / gs.n1;
  const Vec3 u = gs.a2 - gs.b1.dot(gs.a2) * gs.b1;
  gs.nu = u.norm();
  if (gs.nu < kDegenerateTol) {
    throw DegenerateInput("second 6D column is parallel to the first");
  }
  gs.b2 = u / gs.nu;
  gs.b3 = gs.b1.cross(gs.b2);
  return gs;
}

Vec3 vee_skew(const Mat3& m) {
  return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

}  // namespace

Mat3 sixd_to_matrix(const Rot6D& r) {
  const GramSchmidt gs = gram_schmidt(r);
  Mat3 m;
  m.col(0) = gs.b1;
  m.col(1) = gs.b2;
  m.col(2) = gs.b3;
  return m;
}

std::array<double, 6> sixd_to_matrix_vjp(const Rot6D& r, const Mat3& grad_m) {
  const GramSchmidt gs = gram_schmidt(r);
  Vec3 g_b1 = grad_m.col(0);
  Vec3 g_b2 = grad_m.col(1);
  const Vec3 g_b3 = grad_m.col(2);

  // b3 = b1 x b2
  g_b1 += gs.b2.cross(g_b3);
  g_b2 += g_b3.cross(gs.b1);

  // b2 = u / |u|
  const Vec3 g_u = (g_b2 - gs.b2 * gs.b2.dot(g_b2)) / gs.nu;

  // u = a2 - (b1.a2) b1
  const Vec3 g_a2 = g_u - gs.b1 * gs.b1.dot(g_u);
  g_b1 -= gs.a2 * gs.b1.dot(g_u) + gs.b1.dot(gs.a2) * g_u;

  // b1 = a1 / |a1|
  const Vec3 g_a1 = (g_b1 - gs.b1 * gs.b1.dot(g_b1)) / gs.n1;

  return {g_a1.x(), g_a1.y(), g_a1.z(), g_a2.x(), g_a2.y(), g_a2.z()};
}

SixdJacobian sixd_to_matrix_jacobian(const Rot6D& r) {
  SixdJacobian jac;
  for (int k = 0; k < 9; ++k) {
    Mat3 e = Mat3::Zero();
    e(k / 3, k % 3) = 1.0;
    const auto row = sixd_to_matrix_vjp(r, e);
    for (int c = 0; c < 6; ++c) jac(k, c) = row[static_cast<std::size_t>(c)];
  }
  return jac;
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Rot6D matrix_to_sixd(const Mat3& m) {
  if (!is_rotation(m, kRotationCheckTol)) {
    std::ostringstream os;
    os << "matrix is not a rotation (orthonormality/determinant beyond 1e-4):\n" << m;
    throw InvalidRotation(os.str());
  }
  Rot6D r;
  r.v = {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
  return r;
}

Mat3 axis_angle_to_matrix(const AxisAngle& a) {
  const double angle = a.r.norm();
  if (angle < 1e-12) {
    // First-order Rodrigues keeps the map smooth through zero.
    Mat3 k;
    k << 0, -a.r.z(), a.r.y(), a.r.z(), 0, -a.r.x(), -a.r.y(), a.r.x(), 0;
    return Mat3::Identity() + k;
  }
  return Eigen::AngleAxisd(angle, a.r / angle).toRotationMatrix();
}

AxisAngle matrix_to_axis_angle(const Mat3& m) {
  const Vec3 v = vee_skew(m);
  const double s = 0.5 * v.norm();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double angle = std::atan2(s, c);

  if (angle < 1e-8) return {0.5 * v};

  if (std::numbers::pi - angle > 1e-3) {
    return {v * (angle / (2.0 * s))};
  }

  // Near pi the symmetric part is (1-c) a a^T + c I; read the axis off the
  // largest diagonal.
  const Mat3 sym = 0.5 * (m + m.transpose());
  const Mat3 aat = (sym - c * Mat3::Identity()) / (1.0 - c);
  int k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  return {axis * angle};
}

double geodesic_angle_deg(const Mat3& a, const Mat3& b) {
  // atan2 form of arccos((tr(a^T b) - 1) / 2); exact zero for a == b.
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  const double s = 0.5 * vee_skew(rel).norm();
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

Mat3 rotation_delta(const Mat3& curr, const Mat3& prev) { return curr * prev.transpose(); }

Mat3 rot_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

}  // namespace jlm::rotmath
