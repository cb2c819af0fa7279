#include "coevo/physics/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coevo/error.hpp"

namespace coevo::physics {

namespace {

std::vector<Vec2> edge_normals(const std::vector<Vec2>& v) {
    std::vector<Vec2> normals(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 edge = v[(i + 1) % v.size()] - v[i];
        normals[i] = normalized(Vec2{edge.y, -edge.x});
    }
    return normals;
}

}  // namespace

double signed_area(std::span<const Vec2> points) {
    double twice = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        twice += cross(points[i], points[(i + 1) % points.size()]);
    return 0.5 * twice;
}

Polygon Polygon::from_points(std::vector<Vec2> points) {
    if (points.size() < 3) throw Error(ErrorCode::InvalidSpec, "polygon needs at least 3 vertices");
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e1 = points[(i + 1) % n] - points[i];
        const Vec2 e2 = points[(i + 2) % n] - points[(i + 1) % n];
        if (!(cross(e1, e2) > 1e-12))
            throw Error(ErrorCode::InvalidSpec, "polygon must be strictly convex and counterclockwise");
    }
    // A star polygon can pass the turn test; a simple convex polygon turns once.
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e1 = points[(i + 1) % n] - points[i];
        const Vec2 e2 = points[(i + 2) % n] - points[(i + 1) % n];
        turning += std::atan2(cross(e1, e2), dot(e1, e2));
    }
    if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6)
        throw Error(ErrorCode::InvalidSpec, "polygon winds more than once");
    Polygon p;
    p.normals_ = edge_normals(points);
    p.vertices_ = std::move(points);
    return p;
}

Polygon Polygon::box(double half_width, double half_height, Vec2 center, double angle) {
    const Rot q(angle);
    std::vector<Vec2> pts{{-half_width, -half_height},
                          {half_width, -half_height},
                          {half_width, half_height},
                          {-half_width, half_height}};
    for (Vec2& p : pts) p = q.apply(p) + center;
    return from_points(std::move(pts));
}

Polygon Polygon::regular(int sides, double radius, Vec2 center) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(sides));
    for (int i = 0; i < sides; ++i) {
        const double a = 2.0 * std::numbers::pi * i / sides;
        pts.push_back(center + Vec2{radius * std::cos(a), radius * std::sin(a)});
    }
    return from_points(std::move(pts));
}

double Polygon::area() const { return signed_area(vertices_); }

Vec2 Polygon::centroid() const { return mass_properties(*this, 1.0).center; }

Aabb Polygon::bounds() const {
    Aabb box{vertices_.front(), vertices_.front()};
    for (const Vec2& v : vertices_) {
        box.lo = {std::min(box.lo.x, v.x), std::min(box.lo.y, v.y)};
        box.hi = {std::max(box.hi.x, v.x), std::max(box.hi.y, v.y)};
    }
    return box;
}

Polygon Polygon::transformed(const Transform& xf) const {
    Polygon out;
    out.vertices_.reserve(vertices_.size());
    out.normals_.reserve(normals_.size());
    for (const Vec2& v : vertices_) out.vertices_.push_back(xf.apply(v));
    for (const Vec2& n : normals_) out.normals_.push_back(xf.q.apply(n));
    return out;
}

Polygon Polygon::translated(Vec2 offset) const {
    Polygon out = *this;
    for (Vec2& v : out.vertices_) v += offset;
    return out;
}

std::vector<Vec2> clip_to_convex(std::span<const Vec2> subject, const Polygon& clip) {
    std::vector<Vec2> output(subject.begin(), subject.end());
    const auto verts = clip.vertices();
    const auto normals = clip.normals();
    for (std::size_t e = 0; e < verts.size() && !output.empty(); ++e) {
        const Vec2 n = normals[e];
        const double offset = dot(n, verts[e]);
        std::vector<Vec2> input = std::move(output);
        output.clear();
        for (std::size_t i = 0; i < input.size(); ++i) {
            const Vec2 cur = input[i];
            const Vec2 prev = input[(i + input.size() - 1) % input.size()];
            const double dc = dot(n, cur) - offset;
            const double dp = dot(n, prev) - offset;
            if (dc <= 0.0) {
                if (dp > 0.0) output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
                output.push_back(cur);
            } else if (dp <= 0.0) {
                output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
            }
        }
    }
    return output;
}

MassProperties mass_properties(const Polygon& polygon, double density) {
    const auto v = polygon.vertices();
    const Vec2 origin = v[0];
    double area = 0.0;
    double second_moment = 0.0;
    Vec2 center;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e1 = v[i] - origin;
        const Vec2 e2 = v[(i + 1) % v.size()] - origin;
        const double d = cross(e1, e2);
        const double tri = 0.5 * d;
        area += tri;
        center += (e1 + e2) * (tri / 3.0);
        const double ix = e1.x * e1.x + e2.x * e1.x + e2.x * e2.x;
        const double iy = e1.y * e1.y + e2.y * e1.y + e2.y * e2.y;
        second_moment += (0.25 / 3.0) * d * (ix + iy);
    }
    MassProperties props;
    props.mass = density * area;
    center = center * (1.0 / area);
    props.center = center + origin;
    props.inertia = density * second_moment - props.mass * dot(center, center);
    return props;
}

}  // namespace coevo::physics
