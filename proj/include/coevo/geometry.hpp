#pragma once

#include <cmath>

namespace coevo {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    constexpr bool operator==(const Vec2&) const = default;

    double length() const { return std::hypot(x, y); }
    constexpr double length_squared() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// w x r for a scalar angular rate w
constexpr Vec2 cross(double w, Vec2 r) { return {-w * r.y, w * r.x}; }
constexpr Vec2 cross(Vec2 r, double w) { return {w * r.y, -w * r.x}; }
// Counterclockwise perpendicular.
constexpr Vec2 left_normal(Vec2 v) { return {-v.y, v.x}; }

inline Vec2 normalized(Vec2 v) {
    const double len = v.length();
    return len > 0.0 ? v * (1.0 / len) : Vec2{};
}

inline double distance(Vec2 a, Vec2 b) { return (a - b).length(); }

struct Rot {
    double c = 1.0;
    double s = 0.0;

    Rot() = default;
    explicit Rot(double angle) : c(std::cos(angle)), s(std::sin(angle)) {}

    constexpr Vec2 apply(Vec2 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
    constexpr Vec2 apply_inverse(Vec2 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
};

struct Transform {
    Vec2 p;
    Rot q;

    Vec2 apply(Vec2 v) const { return q.apply(v) + p; }
};

}  // namespace coevo
