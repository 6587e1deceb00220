#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace handmotion {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double squared_norm() const { return dot(*this); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Unit quaternion, (w,x,y,z) storage, canonicalized to w >= 0 so that q and
/// -q (the same rotation) compare equal.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quat() = default;
    Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {
        normalize();
    }

    static Quat identity() { return {}; }

    static Quat from_axis_angle(const Vec3& axis_angle) {
        double angle = axis_angle.norm();
        if (angle < 1e-12) {
            // first-order expansion keeps the map smooth through zero
            Quat q;
            q.w = 1.0;
            q.x = 0.5 * axis_angle.x;
            q.y = 0.5 * axis_angle.y;
            q.z = 0.5 * axis_angle.z;
            q.normalize();
            return q;
        }
        Vec3 axis = axis_angle * (1.0 / angle);
        double h = 0.5 * angle;
        double s = std::sin(h);
        return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
    }

    Vec3 to_axis_angle() const {
        // canonical w >= 0 keeps the angle in [0, pi]
        double sin_half = std::sqrt(x * x + y * y + z * z);
        if (sin_half < 1e-12) return {2.0 * x, 2.0 * y, 2.0 * z};
        double angle = 2.0 * std::atan2(sin_half, w);
        double s = angle / sin_half;
        return {x * s, y * s, z * s};
    }

    void normalize() {
        double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (n < 1e-300) {
            w = 1.0; x = y = z = 0.0;
            return;
        }
        double inv = 1.0 / n;
        w *= inv; x *= inv; y *= inv; z *= inv;
        if (w < 0.0) { w = -w; x = -x; y = -y; z = -z; }
    }

    Quat conjugate() const {
        Quat q;
        q.w = w; q.x = -x; q.y = -y; q.z = -z;
        q.normalize();
        return q;
    }

    std::array<std::array<double, 3>, 3> to_matrix() const {
        double xx = x * x, yy = y * y, zz = z * z;
        double xy = x * y, xz = x * z, yz = y * z;
        double wx = w * x, wy = w * y, wz = w * z;
        return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
                 {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
                 {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
    }
};

inline Quat quat_mul(const Quat& a, const Quat& b) {
    Quat q;
    q.w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
    q.x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
    q.y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
    q.z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
    q.normalize();
    return q;
}

inline Vec3 quat_rotate(const Quat& q, const Vec3& v) {
    // v' = v + 2 u x (u x v + w v), u = (x,y,z)
    Vec3 u{q.x, q.y, q.z};
    Vec3 t = u.cross(v) * 2.0;
    return v + t * q.w + u.cross(t);
}

/// Shortest-arc rotation taking `from` onto `to` (both need not be unit).
inline Quat shortest_arc(const Vec3& from, const Vec3& to) {
    Vec3 f = from.normalized();
    Vec3 t = to.normalized();
    double d = f.dot(t);
    if (d > 1.0 - 1e-12) return Quat::identity();
    if (d < -1.0 + 1e-12) {
        // antipodal: rotate pi about any axis orthogonal to f
        Vec3 ortho = std::abs(f.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 axis = f.cross(ortho).normalized();
        return {0.0, axis.x, axis.y, axis.z};
    }
    Vec3 c = f.cross(t);
    return {1.0 + d, c.x, c.y, c.z};
}

struct RigidTransform {
    Quat rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return quat_rotate(rotation, p) + translation; }

    RigidTransform compose(const RigidTransform& inner) const {
        // (*this) after `inner`: apply(inner.apply(p))
        RigidTransform out;
        out.rotation = quat_mul(rotation, inner.rotation);
        out.translation = quat_rotate(rotation, inner.translation) + translation;
        return out;
    }

    RigidTransform inverse() const {
        RigidTransform out;
        out.rotation = rotation.conjugate();
        out.translation = -quat_rotate(out.rotation, translation);
        return out;
    }
};

struct Capsule {
    Vec3 endpoint_a;
    Vec3 endpoint_b;
    double radius = 0.0;
};

/// Signed distance to a capsule: negative inside, zero on the surface.
/// Coincident endpoints degenerate to a sphere.
inline double capsule_signed_distance(const Vec3& p, const Capsule& c) {
    Vec3 ab = c.endpoint_b - c.endpoint_a;
    double len2 = ab.squared_norm();
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp((p - c.endpoint_a).dot(ab) / len2, 0.0, 1.0);
    Vec3 closest = c.endpoint_a + ab * t;
    return (p - closest).norm() - c.radius;
}

}  // namespace handmotion
