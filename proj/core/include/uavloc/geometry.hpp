#pragma once

#include <cmath>

namespace uavloc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec2 xy() const { return {x, y}; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Wraps an angle to [-pi, pi).
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a + M_PI, two_pi);
    if (a < 0.0) a += two_pi;
    return a - M_PI;
}

/// UAV state at one measurement instant. Heading is the yaw angle
/// measured from north (+y) clockwise, wrapped to [-pi, pi).
struct UavPose {
    Vec3 position;
    double heading = 0.0;
};

}  // namespace uavloc
