#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coevo/physics/body.hpp"
#include "coevo/physics/collision.hpp"

namespace coevo::physics {

struct WorldSettings {
    Vec2 gravity{0.0, -9.81};
    double dt = 1.0 / 60.0;
    int solver_iterations = 10;
    double baumgarte = 0.2;
    double slop = 0.005;
    // Approach speeds below this are resolved inelastically.
    double restitution_threshold = 0.5;
    // Contacts are gathered this far apart (plus one step of relative motion)
    // so approaching bodies are stopped before they overlap.
    double speculative_distance = 0.02;
};

/// Region that applies F = -c * v * (submerged area fraction) to bodies with
/// a matching tag, and the angular drag with the same decay rate.
struct DragField {
    Polygon region;
    double coefficient = 0.0;
    BodyTag affects = BodyTag::Design;
};

struct ContactManifold {
    std::size_t body_a = 0;
    std::size_t body_b = 0;
    std::size_t fixture_a = 0;
    std::size_t fixture_b = 0;
    Vec2 normal;               // from body_a toward body_b
    double penetration = 0.0;  // deepest point, >= 0
    std::array<ContactPoint, 2> points{};
    int point_count = 0;
};

class World {
public:
    explicit World(WorldSettings settings = {});

    std::size_t add_body(RigidBody body);
    void add_drag_field(DragField field);

    // One fixed step: gravity and drag, contacts, sequential impulses,
    // positional correction, position integration.
    void step();

    const WorldSettings& settings() const { return settings_; }
    std::span<const RigidBody> bodies() const { return bodies_; }
    const RigidBody& body(std::size_t i) const { return bodies_.at(i); }
    RigidBody& body(std::size_t i) { return bodies_.at(i); }
    std::size_t body_count() const { return bodies_.size(); }
    std::span<const DragField> drag_fields() const { return drag_fields_; }
    std::uint64_t step_count() const { return step_count_; }

    // SHA-256 of the raw bytes of every body's pose and velocity.
    std::string state_hash() const;

    // Manifolds from the most recent step, including speculative ones.
    std::span<const ContactManifold> last_contacts() const { return last_contacts_; }

private:
    WorldSettings settings_;
    std::vector<RigidBody> bodies_;
    std::vector<DragField> drag_fields_;
    std::vector<ContactManifold> last_contacts_;
    std::uint64_t step_count_ = 0;
};

World step(World world);

// Overlapping fixture pairs of distinct bodies (static-static and sensor
// pairs excluded).
std::vector<ContactManifold> detect_contacts(const World& world);

// Indices of bodies with any fixture touching or overlapping `region`.
std::vector<std::size_t> query_region(const World& world, const Polygon& region);

double submerged_fraction(const RigidBody& body, const Polygon& region);

double total_energy(const World& world);

}  // namespace coevo::physics
