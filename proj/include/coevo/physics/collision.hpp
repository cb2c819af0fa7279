#pragma once

#include <array>
#include <optional>

#include "coevo/physics/polygon.hpp"

namespace coevo::physics {

struct ContactPoint {
    Vec2 position;
    double separation = 0.0;  // negative when penetrating
};

// Narrow-phase result for two world-space polygons. `normal` points from the
// first polygon toward the second.
struct PolygonContact {
    Vec2 normal;
    std::array<ContactPoint, 2> points{};
    int point_count = 0;
};

// Minimum separation over the edge normals of `a` (SAT). Positive means a
// separating axis exists.
struct AxisQuery {
    int edge = -1;
    double separation = 0.0;
};
AxisQuery max_separation(const Polygon& a, const Polygon& b);

// Separating-axis test with reference/incident edge clipping. Points whose
// separation exceeds `margin` are discarded; nullopt if no point remains.
std::optional<PolygonContact> collide_polygons(const Polygon& a, const Polygon& b, double margin);

// Closed-set overlap test (touching counts).
bool polygons_intersect(const Polygon& a, const Polygon& b);

}  // namespace coevo::physics
