#pragma once

#include <array>

#include <Eigen/Core>

namespace jlm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Continuous 6D rotation: the first two columns of a rotation matrix,
// column-major (a1 = v[0..2], a2 = v[3..5]).
struct Rot6D {
  std::array<double, 6> v{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  Vec3 a1() const { return {v[0], v[1], v[2]}; }
  Vec3 a2() const { return {v[3], v[4], v[5]}; }
  bool operator==(const Rot6D&) const = default;
};

// Axis scaled by angle (radians).
struct AxisAngle {
  Vec3 r = Vec3::Zero();
};

// d(vec M)/d(6D), with vec M the row-major flattening m(r, c) -> 3 * r + c.
using SixdJacobian = Eigen::Matrix<double, 9, 6>;

namespace rotmath {

inline constexpr double kDegenerateTol = 1e-8;
inline constexpr double kRotationCheckTol = 1e-4;

// Gram-Schmidt: b1 = n(a1), b2 = n(a2 - (b1.a2) b1), b3 = b1 x b2.
// Throws DegenerateInput when either vector collapses below 1e-8.
Mat3 sixd_to_matrix(const Rot6D& r);

// Vector-Jacobian product of sixd_to_matrix: given dL/dM returns dL/d(6D).
std::array<double, 6> sixd_to_matrix_vjp(const Rot6D& r, const Mat3& grad_m);
SixdJacobian sixd_to_matrix_jacobian(const Rot6D& r);

// Throws InvalidRotation if m is not a rotation within 1e-4.
Rot6D matrix_to_sixd(const Mat3& m);

Mat3 axis_angle_to_matrix(const AxisAngle& r);
AxisAngle matrix_to_axis_angle(const Mat3& m);

// Geodesic distance in degrees, in [0, 180].
double geodesic_angle_deg(const Mat3& a, const Mat3& b);

// World-frame delta: curr * prev^T, so that delta * prev == curr.
Mat3 rotation_delta(const Mat3& curr, const Mat3& prev);

bool is_rotation(const Mat3& m, double tol = 1e-6);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

}  // namespace rotmath
}  // namespace jlm
