#pragma once

#include <span>
#include <vector>

#include "coevo/geometry.hpp"

namespace coevo::physics {

struct Aabb {
    Vec2 lo;
    Vec2 hi;

    bool overlaps(const Aabb& o) const {
        return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
    }
    Aabb expanded(double margin) const {
        return {{lo.x - margin, lo.y - margin}, {hi.x + margin, hi.y + margin}};
    }
};

/// Convex polygon, counterclockwise, with outward unit edge normals.
/// normal(i) belongs to the edge vertex(i) -> vertex(i+1).
class Polygon {
public:
    Polygon() = default;

    // Throws InvalidSpec unless the points form a strictly convex CCW polygon
    // with at least three vertices.
    static Polygon from_points(std::vector<Vec2> points);
    static Polygon box(double half_width, double half_height, Vec2 center = {}, double angle = 0.0);
    // Regular n-gon with circumradius `radius`, first vertex on +x.
    static Polygon regular(int sides, double radius, Vec2 center = {});

    std::span<const Vec2> vertices() const { return vertices_; }
    std::span<const Vec2> normals() const { return normals_; }
    std::size_t size() const { return vertices_.size(); }

    double area() const;
    Vec2 centroid() const;
    Aabb bounds() const;

    Polygon transformed(const Transform& xf) const;
    Polygon translated(Vec2 offset) const;

private:
    std::vector<Vec2> vertices_;
    std::vector<Vec2> normals_;
};

double signed_area(std::span<const Vec2> points);

// Sutherland-Hodgman: the part of `subject` inside the convex `clip`.
std::vector<Vec2> clip_to_convex(std::span<const Vec2> subject, const Polygon& clip);

struct MassProperties {
    double mass = 0.0;
    Vec2 center;
    double inertia = 0.0;  // about `center`
};

MassProperties mass_properties(const Polygon& polygon, double density);

}  // namespace coevo::physics
