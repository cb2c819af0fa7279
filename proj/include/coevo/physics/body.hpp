#pragma once

#include <string_view>
#include <vector>

#include "coevo/physics/polygon.hpp"
#include "coevo/shape.hpp"

namespace coevo::physics {

enum class BodyTag { Design, Ball, Projectile, Ground, Medium, Sensor };

std::string_view to_string(BodyTag tag);
BodyTag body_tag_from_string(std::string_view s);

struct Material {
    double friction = 0.5;
    double restitution = 0.0;
};

/// A rigid body. `position` is the center of mass and fixtures are expressed
/// relative to it. Mass 0 marks a static body.
struct RigidBody {
    Vec2 position;
    double angle = 0.0;
    Vec2 linear_velocity;
    double angular_velocity = 0.0;
    double mass = 0.0;
    double inverse_mass = 0.0;
    double inertia = 0.0;
    double inverse_inertia = 0.0;
    std::vector<Polygon> fixtures;
    double friction = 0.5;
    double restitution = 0.0;
    BodyTag tag = BodyTag::Ground;

    bool is_static() const { return mass == 0.0; }
    Transform transform() const { return {position, Rot(angle)}; }

    // Fixtures are given in the body frame placed at `position` / `angle`.
    static RigidBody make_static(std::vector<Polygon> fixtures, Material material, BodyTag tag,
                                 Vec2 position = {}, double angle = 0.0);
    // Fixtures are given in world coordinates; the body frame is re-centered
    // on the combined center of mass.
    static RigidBody make_dynamic(const std::vector<Polygon>& world_fixtures, double density,
                                  Material material, BodyTag tag);
};

/// One rigid body whose fixtures are the chain's rectangles. Overlapping
/// bricks are double counted in mass and inertia.
RigidBody compound_from_chain(const shape::BrickChain& chain, double density, Material material,
                              BodyTag tag = BodyTag::Design);
RigidBody compound_from_chain(const shape::Design& chain, double density, Material material,
                              BodyTag tag = BodyTag::Design);

// Kinetic plus gravitational potential energy (zero potential at the origin).
double mechanical_energy(const RigidBody& body, Vec2 gravity);

// Fixture polygons in world coordinates.
std::vector<Polygon> world_fixtures(const RigidBody& body);

}  // namespace coevo::physics
