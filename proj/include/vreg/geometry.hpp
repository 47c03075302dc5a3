#pragma once
// Rigid and affine transform algebra over the 6-parameter encoding
// (tx, ty, tz in mm; rx, ry, rz in degrees). A transform acts column-wise
// on homogeneous points p = [x, y, z, 1]^T, and factors as
//   T = Trans(t) * Rx(rx) * Ry(ry) * Rz(rz).
// The transformation distance D(Tg, T) is the L2 norm of the parameters
// of Tg * T^-1, mixing millimetres and degrees with unit weights.

#include <Eigen/Dense>

#include "vreg/rng.hpp"

namespace vreg::geom {

using Vector6 = Eigen::Matrix<double, 6, 1>;

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

struct RigidTransform {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

    static RigidTransform identity() { return {}; }
    static RigidTransform translate(double tx, double ty, double tz);

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return m.topLeftCorner<3, 3>() * p + m.topRightCorner<3, 1>();
    }
    Eigen::Matrix3d rotation() const { return m.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return m.topRightCorner<3, 1>(); }
};

// Homogeneous matrix with a free 3x3 linear block and zero translation.
struct AffineTransform {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return m.topLeftCorner<3, 3>() * p;
    }
};

// Builds the transform for v = (tx,ty,tz, rx,ry,rz). Angles in degrees.
RigidTransform transform_from_params(const Vector6& v);

// Inverse of transform_from_params. Valid for |ry| strictly inside
// (-90, 90) degrees; throws GimbalLockError within 1e-6 deg of +-90.
Vector6 params_from_transform(const RigidTransform& t);

// Matrix product a * b (apply b first, then a).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Exact rigid inverse (transposed rotation, negated rotated translation).
RigidTransform invert(const RigidTransform& t);

// D(Tg, T) = || params(Tg * T^-1) ||_2. Unit weights unless given.
double distance(const RigidTransform& tg, const RigidTransform& t);
double distance(const RigidTransform& tg, const RigidTransform& t,
                const Vector6& weights);

// T_A = I + C with each c_ij drawn i.i.d. uniform from
// [-shear_range, shear_range]. Resamples internally while |det| <= 1e-6;
// throws DegenerateError after 100 attempts.
AffineTransform random_affine(double shear_range, Rng& rng);
AffineTransform random_affine(double shear_range, uint64_t seed);

}  // namespace vreg::geom
