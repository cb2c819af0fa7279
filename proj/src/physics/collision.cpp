#include "coevo/physics/collision.hpp"

#include <limits>

namespace coevo::physics {

namespace {

// Prefer the first polygon as reference unless the second is clearly better.
constexpr double kReferenceTolerance = 0.1 * 0.005;

// Keeps the part of segment [in0, in1] with dot(normal, p) <= offset.
int clip_segment(const std::array<Vec2, 2>& in, std::array<Vec2, 2>& out, Vec2 normal, double offset) {
    int count = 0;
    const double d0 = dot(normal, in[0]) - offset;
    const double d1 = dot(normal, in[1]) - offset;
    if (d0 <= 0.0) out[count++] = in[0];
    if (d1 <= 0.0) out[count++] = in[1];
    if (d0 * d1 < 0.0) out[count++] = in[0] + (in[1] - in[0]) * (d0 / (d0 - d1));
    return count;
}

int incident_edge(const Polygon& incident, Vec2 reference_normal) {
    const auto normals = incident.normals();
    int best = 0;
    double min_dot = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const double d = dot(reference_normal, normals[i]);
        if (d < min_dot) {
            min_dot = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace

AxisQuery max_separation(const Polygon& a, const Polygon& b) {
    const auto va = a.vertices();
    const auto na = a.normals();
    const auto vb = b.vertices();
    AxisQuery best{-1, -std::numeric_limits<double>::max()};
    for (std::size_t i = 0; i < va.size(); ++i) {
        double si = std::numeric_limits<double>::max();
        for (const Vec2& v : vb) si = std::min(si, dot(na[i], v - va[i]));
        if (si > best.separation) best = {static_cast<int>(i), si};
    }
    return best;
}

std::optional<PolygonContact> collide_polygons(const Polygon& a, const Polygon& b, double margin) {
    const AxisQuery qa = max_separation(a, b);
    if (qa.separation > margin) return std::nullopt;
    const AxisQuery qb = max_separation(b, a);
    if (qb.separation > margin) return std::nullopt;

    const bool flip = qb.separation > qa.separation + kReferenceTolerance;
    const Polygon& ref = flip ? b : a;
    const Polygon& inc = flip ? a : b;
    const int ref_edge = flip ? qb.edge : qa.edge;

    const auto rv = ref.vertices();
    const std::size_t rn = rv.size();
    const Vec2 v11 = rv[static_cast<std::size_t>(ref_edge)];
    const Vec2 v12 = rv[(static_cast<std::size_t>(ref_edge) + 1) % rn];
    const Vec2 normal = ref.normals()[static_cast<std::size_t>(ref_edge)];
    const Vec2 tangent = normalized(v12 - v11);

    const int ie = incident_edge(inc, normal);
    const auto iv = inc.vertices();
    const std::array<Vec2, 2> incident{iv[static_cast<std::size_t>(ie)],
                                       iv[(static_cast<std::size_t>(ie) + 1) % iv.size()]};

    std::array<Vec2, 2> clip1{};
    std::array<Vec2, 2> clip2{};
    if (clip_segment(incident, clip1, -tangent, -dot(tangent, v11)) < 2) return std::nullopt;
    if (clip_segment(clip1, clip2, tangent, dot(tangent, v12)) < 2) return std::nullopt;

    const double front = dot(normal, v11);
    PolygonContact contact;
    contact.normal = flip ? -normal : normal;
    for (const Vec2& p : clip2) {
        const double separation = dot(normal, p) - front;
        if (separation <= margin) {
            // midway between the incident point and the reference face
            contact.points[static_cast<std::size_t>(contact.point_count++)] = {p - normal * (0.5 * separation),
                                                                               separation};
        }
    }
    if (contact.point_count == 0) return std::nullopt;
    return contact;
}

bool polygons_intersect(const Polygon& a, const Polygon& b) {
    return max_separation(a, b).separation <= 0.0 && max_separation(b, a).separation <= 0.0;
}

}  // namespace coevo::physics
