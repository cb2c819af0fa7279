#include "coevo/physics/body.hpp"

#include <string>

#include "coevo/error.hpp"

namespace coevo::physics {

std::string_view to_string(BodyTag tag) {
    switch (tag) {
    case BodyTag::Design: return "design";
    case BodyTag::Ball: return "ball";
    case BodyTag::Projectile: return "projectile";
    case BodyTag::Ground: return "ground";
    case BodyTag::Medium: return "medium";
    case BodyTag::Sensor: return "sensor";
    }
    return "ground";
}

BodyTag body_tag_from_string(std::string_view s) {
    for (BodyTag t : {BodyTag::Design, BodyTag::Ball, BodyTag::Projectile, BodyTag::Ground,
                      BodyTag::Medium, BodyTag::Sensor})
        if (to_string(t) == s) return t;
    throw Error(ErrorCode::ParseError, "unknown body tag '" + std::string(s) + "'");
}

RigidBody RigidBody::make_static(std::vector<Polygon> fixtures, Material material, BodyTag tag,
                                 Vec2 position, double angle) {
    RigidBody body;
    body.position = position;
    body.angle = angle;
    body.fixtures = std::move(fixtures);
    body.friction = material.friction;
    body.restitution = material.restitution;
    body.tag = tag;
    return body;
}

RigidBody RigidBody::make_dynamic(const std::vector<Polygon>& world_fixtures, double density,
                                  Material material, BodyTag tag) {
    if (world_fixtures.empty() || !(density > 0.0))
        throw Error(ErrorCode::InvalidSpec, "dynamic body needs fixtures and positive density");
    double mass = 0.0;
    Vec2 weighted;
    std::vector<MassProperties> parts;
    parts.reserve(world_fixtures.size());
    for (const Polygon& p : world_fixtures) {
        parts.push_back(mass_properties(p, density));
        mass += parts.back().mass;
        weighted += parts.back().center * parts.back().mass;
    }
    const Vec2 com = weighted * (1.0 / mass);
    double inertia = 0.0;
    for (const MassProperties& part : parts)
        inertia += part.inertia + part.mass * (part.center - com).length_squared();

    RigidBody body;
    body.position = com;
    body.mass = mass;
    body.inverse_mass = 1.0 / mass;
    body.inertia = inertia;
    body.inverse_inertia = 1.0 / inertia;
    body.friction = material.friction;
    body.restitution = material.restitution;
    body.tag = tag;
    body.fixtures.reserve(world_fixtures.size());
    for (const Polygon& p : world_fixtures) body.fixtures.push_back(p.translated(-com));
    return body;
}

RigidBody compound_from_chain(const shape::BrickChain& chain, double density, Material material,
                              BodyTag tag) {
    if (!(density > 0.0)) throw Error(ErrorCode::InvalidSpec, "density must be positive");
    const auto rects = shape::chain_vertices(chain);
    const double length = chain.brick_length();
    const double thickness = chain.brick_thickness();
    const double brick_mass = density * length * thickness;
    const double brick_inertia = brick_mass * (length * length + thickness * thickness) / 12.0;

    Vec2 weighted;
    for (const auto& r : rects) weighted += (r[0] + r[2]) * 0.5;
    const double mass = brick_mass * static_cast<double>(rects.size());
    const Vec2 com = weighted * (1.0 / static_cast<double>(rects.size()));

    double inertia = 0.0;
    std::vector<Polygon> fixtures;
    fixtures.reserve(rects.size());
    for (const auto& r : rects) {
        const Vec2 center = (r[0] + r[2]) * 0.5;
        inertia += brick_inertia + brick_mass * (center - com).length_squared();
        fixtures.push_back(Polygon::from_points({r[0] - com, r[1] - com, r[2] - com, r[3] - com}));
    }

    RigidBody body;
    body.position = com;
    body.mass = mass;
    body.inverse_mass = 1.0 / mass;
    body.inertia = inertia;
    body.inverse_inertia = 1.0 / inertia;
    body.fixtures = std::move(fixtures);
    body.friction = material.friction;
    body.restitution = material.restitution;
    body.tag = tag;
    return body;
}

RigidBody compound_from_chain(const shape::Design& chain, double density, Material material,
                              BodyTag tag) {
    if (!chain) throw Error(ErrorCode::EmptyChain, "cannot build a body from an empty design");
    return compound_from_chain(*chain, density, material, tag);
}

double mechanical_energy(const RigidBody& body, Vec2 gravity) {
    if (body.is_static()) return 0.0;
    return 0.5 * body.mass * body.linear_velocity.length_squared() +
           0.5 * body.inertia * body.angular_velocity * body.angular_velocity -
           body.mass * dot(gravity, body.position);
}

std::vector<Polygon> world_fixtures(const RigidBody& body) {
    const Transform xf = body.transform();
    std::vector<Polygon> out;
    out.reserve(body.fixtures.size());
    for (const Polygon& p : body.fixtures) out.push_back(p.transformed(xf));
    return out;
}

}  // namespace coevo::physics
