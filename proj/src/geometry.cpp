#include "vreg/geometry.hpp"

#include <cmath>

#include "vreg/errors.hpp"

namespace vreg::geom {

RigidTransform RigidTransform::translate(double tx, double ty, double tz) {
    RigidTransform t;
    t.m(0, 3) = tx;
    t.m(1, 3) = ty;
    t.m(2, 3) = tz;
    return t;
}

RigidTransform transform_from_params(const Vector6& v) {
    const double cx = std::cos(v[3] * kDegToRad), sx = std::sin(v[3] * kDegToRad);
    const double cy = std::cos(v[4] * kDegToRad), sy = std::sin(v[4] * kDegToRad);
    const double cz = std::cos(v[5] * kDegToRad), sz = std::sin(v[5] * kDegToRad);

    Eigen::Matrix3d rx, ry, rz;
    rx << 1, 0, 0,
          0, cx, -sx,
          0, sx, cx;
    ry << cy, 0, sy,
          0, 1, 0,
          -sy, 0, cy;
    rz << cz, -sz, 0,
          sz, cz, 0,
          0, 0, 1;

    RigidTransform t;
    t.m.topLeftCorner<3, 3>() = rx * ry * rz;
    t.m.topRightCorner<3, 1>() = Eigen::Vector3d(v[0], v[1], v[2]);
    return t;
}

Vector6 params_from_transform(const RigidTransform& t) {
    const Eigen::Matrix3d r = t.rotation();

    // R = Rx * Ry * Rz gives R(0,2) = sin(ry), R(1,2) = -sin(rx)cos(ry),
    // R(2,2) = cos(rx)cos(ry), R(0,1) = -cos(ry)sin(rz), R(0,0) = cos(ry)cos(rz).
    const double sy = std::clamp(r(0, 2), -1.0, 1.0);
    const double ry_deg = std::asin(sy) * kRadToDeg;
    if (90.0 - std::abs(ry_deg) < 1e-6) {
        throw GimbalLockError("params_from_transform: |ry| within 1e-6 deg of 90");
    }

    Vector6 v;
    v[0] = t.m(0, 3);
    v[1] = t.m(1, 3);
    v[2] = t.m(2, 3);
    v[3] = std::atan2(-r(1, 2), r(2, 2)) * kRadToDeg;
    v[4] = ry_deg;
    v[5] = std::atan2(-r(0, 1), r(0, 0)) * kRadToDeg;
    return v;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform t;
    t.m = a.m * b.m;
    return t;
}

RigidTransform invert(const RigidTransform& t) {
    RigidTransform out;
    const Eigen::Matrix3d rt = t.rotation().transpose();
    out.m.topLeftCorner<3, 3>() = rt;
    out.m.topRightCorner<3, 1>() = -rt * t.translation();
    return out;
}

double distance(const RigidTransform& tg, const RigidTransform& t) {
    if (tg.m == t.m) return 0.0;  // exact zero for identical transforms
    return params_from_transform(compose(tg, invert(t))).norm();
}

double distance(const RigidTransform& tg, const RigidTransform& t,
                const Vector6& weights) {
    if (tg.m == t.m) return 0.0;
    const Vector6 v = params_from_transform(compose(tg, invert(t)));
    return v.cwiseProduct(weights).norm();
}

AffineTransform random_affine(double shear_range, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        AffineTransform a;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                a.m(i, j) += rng.uniform(-shear_range, shear_range);
            }
        }
        if (std::abs(a.m.topLeftCorner<3, 3>().determinant()) > 1e-6) {
            return a;
        }
    }
    throw DegenerateError("random_affine: could not draw a nonsingular matrix");
}

AffineTransform random_affine(double shear_range, uint64_t seed) {
    Rng rng(seed);
    return random_affine(shear_range, rng);
}

}  // namespace vreg::geom
