#include "coevo/physics/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "coevo/json_util.hpp"

namespace coevo::physics {

namespace {

// Block solves of two-point manifolds are skipped when K is this badly
// conditioned.
constexpr double kMaxConditionNumber = 1000.0;
constexpr double kEnergyTolerance = 1e-9;

struct BodyCache {
    std::vector<Polygon> polygons;
    std::vector<Aabb> fixture_bounds;
    Aabb bounds;
    double expansion = 0.0;
};

bool collidable(const RigidBody& a, const RigidBody& b) {
    if (a.is_static() && b.is_static()) return false;
    return a.tag != BodyTag::Sensor && b.tag != BodyTag::Sensor;
}

double bounding_radius(const RigidBody& body) {
    double r = 0.0;
    for (const Polygon& p : body.fixtures)
        for (const Vec2& v : p.vertices()) r = std::max(r, v.length_squared());
    return std::sqrt(r);
}

// `motion_dt` > 0 inflates bounds by one step of each body's motion plus half
// the speculative distance.
std::vector<BodyCache> build_cache(std::span<const RigidBody> bodies, double motion_dt, double base) {
    std::vector<BodyCache> cache(bodies.size());
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const RigidBody& body = bodies[i];
        BodyCache& c = cache[i];
        c.polygons = world_fixtures(body);
        if (motion_dt > 0.0) {
            c.expansion = 0.5 * base;
            if (!body.is_static())
                c.expansion += motion_dt * (body.linear_velocity.length() +
                                            std::abs(body.angular_velocity) * bounding_radius(body));
        }
        c.fixture_bounds.reserve(c.polygons.size());
        for (std::size_t f = 0; f < c.polygons.size(); ++f) {
            c.fixture_bounds.push_back(c.polygons[f].bounds().expanded(c.expansion));
            if (f == 0) {
                c.bounds = c.fixture_bounds.back();
            } else {
                const Aabb& fb = c.fixture_bounds.back();
                c.bounds.lo = {std::min(c.bounds.lo.x, fb.lo.x), std::min(c.bounds.lo.y, fb.lo.y)};
                c.bounds.hi = {std::max(c.bounds.hi.x, fb.hi.x), std::max(c.bounds.hi.y, fb.hi.y)};
            }
        }
    }
    return cache;
}

// Sweep over bodies sorted by the lower x bound; pairs come back as (i < j)
// in ascending order.
std::vector<std::pair<std::size_t, std::size_t>> broad_phase(std::span<const RigidBody> bodies,
                                                             const std::vector<BodyCache>& cache) {
    std::vector<std::size_t> order;
    order.reserve(bodies.size());
    for (std::size_t i = 0; i < bodies.size(); ++i)
        if (!cache[i].polygons.empty()) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cache[a].bounds.lo.x != cache[b].bounds.lo.x) return cache[a].bounds.lo.x < cache[b].bounds.lo.x;
        return a < b;
    });
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        for (std::size_t m = k + 1; m < order.size(); ++m) {
            const std::size_t j = order[m];
            if (cache[j].bounds.lo.x > cache[i].bounds.hi.x) break;
            if (!cache[i].bounds.overlaps(cache[j].bounds)) continue;
            if (!collidable(bodies[i], bodies[j])) continue;
            pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<ContactManifold> find_manifolds(std::span<const RigidBody> bodies,
                                            const std::vector<BodyCache>& cache) {
    std::vector<ContactManifold> out;
    for (const auto& [a, b] : broad_phase(bodies, cache)) {
        const double margin = cache[a].expansion + cache[b].expansion;
        const BodyCache& ca = cache[a];
        const BodyCache& cb = cache[b];
        for (std::size_t fa = 0; fa < ca.polygons.size(); ++fa) {
            if (!ca.fixture_bounds[fa].overlaps(cb.bounds)) continue;
            for (std::size_t fb = 0; fb < cb.polygons.size(); ++fb) {
                if (!ca.fixture_bounds[fa].overlaps(cb.fixture_bounds[fb])) continue;
                auto hit = collide_polygons(ca.polygons[fa], cb.polygons[fb], margin);
                if (!hit) continue;
                ContactManifold m;
                m.body_a = a;
                m.body_b = b;
                m.fixture_a = fa;
                m.fixture_b = fb;
                m.normal = hit->normal;
                m.points = hit->points;
                m.point_count = hit->point_count;
                double deepest = 0.0;
                for (int p = 0; p < m.point_count; ++p)
                    deepest = std::max(deepest, -m.points[static_cast<std::size_t>(p)].separation);
                m.penetration = deepest;
                out.push_back(m);
            }
        }
    }
    return out;
}

struct PointConstraint {
    Vec2 ra;
    Vec2 rb;
    double normal_mass = 0.0;
    double tangent_mass = 0.0;
    double normal_impulse = 0.0;
    double tangent_impulse = 0.0;
    double bias = 0.0;
};

struct Constraint {
    std::size_t a = 0;
    std::size_t b = 0;
    Vec2 normal;
    Vec2 tangent;
    double friction = 0.0;
    std::array<PointConstraint, 2> points{};
    int count = 0;
    bool block = false;
    // K and its inverse for two-point block solves
    double k11 = 0.0, k12 = 0.0, k22 = 0.0;
    double m11 = 0.0, m12 = 0.0, m22 = 0.0;
};

class Solver {
public:
    Solver(std::vector<RigidBody>& bodies, const WorldSettings& settings, bool restitution)
        : bodies_(bodies), settings_(settings), restitution_(restitution) {}

    void prepare(const std::vector<ContactManifold>& manifolds, const std::vector<Vec2>& v0,
                 const std::vector<double>& w0) {
        constraints_.reserve(manifolds.size());
        for (const ContactManifold& m : manifolds) {
            const RigidBody& A = bodies_[m.body_a];
            const RigidBody& B = bodies_[m.body_b];
            Constraint c;
            c.a = m.body_a;
            c.b = m.body_b;
            c.normal = m.normal;
            c.tangent = {m.normal.y, -m.normal.x};
            c.friction = std::sqrt(A.friction * B.friction);
            const double restitution = std::max(A.restitution, B.restitution);
            c.count = m.point_count;
            const double ma = A.inverse_mass, mb = B.inverse_mass;
            const double ia = A.inverse_inertia, ib = B.inverse_inertia;
            for (int k = 0; k < m.point_count; ++k) {
                const ContactPoint& cp = m.points[static_cast<std::size_t>(k)];
                PointConstraint& pc = c.points[static_cast<std::size_t>(k)];
                pc.ra = cp.position - A.position;
                pc.rb = cp.position - B.position;
                const double rna = cross(pc.ra, c.normal);
                const double rnb = cross(pc.rb, c.normal);
                const double kn = ma + mb + ia * rna * rna + ib * rnb * rnb;
                pc.normal_mass = kn > 0.0 ? 1.0 / kn : 0.0;
                const double rta = cross(pc.ra, c.tangent);
                const double rtb = cross(pc.rb, c.tangent);
                const double kt = ma + mb + ia * rta * rta + ib * rtb * rtb;
                pc.tangent_mass = kt > 0.0 ? 1.0 / kt : 0.0;

                const double vn1 = dot(B.linear_velocity + cross(B.angular_velocity, pc.rb) -
                                           A.linear_velocity - cross(A.angular_velocity, pc.ra),
                                       c.normal);
                const double vn0 = dot(v0[c.b] + cross(w0[c.b], pc.rb) - v0[c.a] - cross(w0[c.a], pc.ra),
                                       c.normal);
                const double gap = std::max(cp.separation, 0.0);
                pc.bias = -gap / settings_.dt;
                // Bounce off the pre-step approach velocity, then let this
                // step's gravity and drag act on the rebound.
                if (restitution_ && restitution > 0.0 && vn0 < -settings_.restitution_threshold &&
                    gap + vn1 * settings_.dt < 0.0)
                    pc.bias = std::max(pc.bias, vn1 - (1.0 + restitution) * vn0);
            }
            if (c.count == 2) {
                const PointConstraint& p1 = c.points[0];
                const PointConstraint& p2 = c.points[1];
                const double rn1a = cross(p1.ra, c.normal), rn1b = cross(p1.rb, c.normal);
                const double rn2a = cross(p2.ra, c.normal), rn2b = cross(p2.rb, c.normal);
                c.k11 = ma + mb + ia * rn1a * rn1a + ib * rn1b * rn1b;
                c.k22 = ma + mb + ia * rn2a * rn2a + ib * rn2b * rn2b;
                c.k12 = ma + mb + ia * rn1a * rn2a + ib * rn1b * rn2b;
                const double det = c.k11 * c.k22 - c.k12 * c.k12;
                if (c.k11 * c.k11 < kMaxConditionNumber * det) {
                    c.block = true;
                    const double inv = 1.0 / det;
                    c.m11 = c.k22 * inv;
                    c.m22 = c.k11 * inv;
                    c.m12 = -c.k12 * inv;
                }
            }
            constraints_.push_back(c);
        }
    }

    void solve() {
        for (Constraint& c : constraints_) {
            solve_friction(c);
            if (c.block)
                solve_block(c);
            else
                solve_sequential(c);
        }
    }

private:
    Vec2 relative_velocity(const Constraint& c, const PointConstraint& p) const {
        const RigidBody& A = bodies_[c.a];
        const RigidBody& B = bodies_[c.b];
        return B.linear_velocity + cross(B.angular_velocity, p.rb) - A.linear_velocity -
               cross(A.angular_velocity, p.ra);
    }

    void apply(const Constraint& c, const PointConstraint& p, Vec2 impulse) {
        RigidBody& A = bodies_[c.a];
        RigidBody& B = bodies_[c.b];
        if (!A.is_static()) {
            A.linear_velocity -= impulse * A.inverse_mass;
            A.angular_velocity -= A.inverse_inertia * cross(p.ra, impulse);
        }
        if (!B.is_static()) {
            B.linear_velocity += impulse * B.inverse_mass;
            B.angular_velocity += B.inverse_inertia * cross(p.rb, impulse);
        }
    }

    void solve_friction(Constraint& c) {
        for (int k = 0; k < c.count; ++k) {
            PointConstraint& p = c.points[static_cast<std::size_t>(k)];
            const double vt = dot(relative_velocity(c, p), c.tangent);
            const double max_friction = c.friction * p.normal_impulse;
            const double next = std::clamp(p.tangent_impulse - p.tangent_mass * vt, -max_friction, max_friction);
            const double lambda = next - p.tangent_impulse;
            p.tangent_impulse = next;
            apply(c, p, c.tangent * lambda);
        }
    }

    void solve_sequential(Constraint& c) {
        for (int k = 0; k < c.count; ++k) {
            PointConstraint& p = c.points[static_cast<std::size_t>(k)];
            const double vn = dot(relative_velocity(c, p), c.normal);
            const double next = std::max(p.normal_impulse - p.normal_mass * (vn - p.bias), 0.0);
            const double lambda = next - p.normal_impulse;
            p.normal_impulse = next;
            apply(c, p, c.normal * lambda);
        }
    }

    // Exact two-point LCP by enumerating the four complementarity cases.
    void solve_block(Constraint& c) {
        PointConstraint& p1 = c.points[0];
        PointConstraint& p2 = c.points[1];
        const double a1 = p1.normal_impulse;
        const double a2 = p2.normal_impulse;
        const double vn1 = dot(relative_velocity(c, p1), c.normal);
        const double vn2 = dot(relative_velocity(c, p2), c.normal);
        const double b1 = vn1 - p1.bias - (c.k11 * a1 + c.k12 * a2);
        const double b2 = vn2 - p2.bias - (c.k12 * a1 + c.k22 * a2);

        auto commit = [&](double x1, double x2) {
            apply(c, p1, c.normal * (x1 - a1));
            apply(c, p2, c.normal * (x2 - a2));
            p1.normal_impulse = x1;
            p2.normal_impulse = x2;
        };

        double x1 = -(c.m11 * b1 + c.m12 * b2);
        double x2 = -(c.m12 * b1 + c.m22 * b2);
        if (x1 >= 0.0 && x2 >= 0.0) return commit(x1, x2);

        x1 = -p1.normal_mass * b1;
        if (x1 >= 0.0 && c.k12 * x1 + b2 >= 0.0) return commit(x1, 0.0);

        x2 = -p2.normal_mass * b2;
        if (x2 >= 0.0 && c.k12 * x2 + b1 >= 0.0) return commit(0.0, x2);

        if (b1 >= 0.0 && b2 >= 0.0) return commit(0.0, 0.0);
        // No case applies (numerically degenerate); keep the previous impulses.
    }

    std::vector<RigidBody>& bodies_;
    const WorldSettings& settings_;
    std::vector<Constraint> constraints_;
    bool restitution_;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
}

// Energy change a body would see this step if it left the solver with its
// current velocity: kinetic change from the step start plus the potential
// change of moving v*dt through gravity.
double step_energy_change(const RigidBody& b, Vec2 v0, double w0, const WorldSettings& s) {
    const Vec2 v = b.linear_velocity;
    const double w = b.angular_velocity;
    return 0.5 * b.mass * (dot(v, v) - dot(v0, v0)) + 0.5 * b.inertia * (w * w - w0 * w0) -
           b.mass * dot(s.gravity, v) * s.dt;
}

// Position offsets, one correction per body pair driven by its deepest
// manifold, so a compound touching with many fixtures is not pushed once per
// fixture.
std::vector<Vec2> positional_correction(const std::vector<RigidBody>& bodies,
                                        const std::vector<ContactManifold>& manifolds,
                                        const WorldSettings& settings) {
    std::vector<Vec2> offset(bodies.size());
    std::size_t i = 0;
    while (i < manifolds.size()) {
        const ContactManifold* deepest = &manifolds[i];
        std::size_t j = i + 1;
        while (j < manifolds.size() && manifolds[j].body_a == manifolds[i].body_a &&
               manifolds[j].body_b == manifolds[i].body_b) {
            if (manifolds[j].penetration > deepest->penetration) deepest = &manifolds[j];
            ++j;
        }
        i = j;
        const double excess = deepest->penetration - settings.slop;
        if (excess <= 0.0) continue;
        const RigidBody& A = bodies[deepest->body_a];
        const RigidBody& B = bodies[deepest->body_b];
        const double inv_sum = A.inverse_mass + B.inverse_mass;
        if (inv_sum <= 0.0) continue;
        const Vec2 correction = deepest->normal * (settings.baumgarte * excess / inv_sum);
        offset[deepest->body_a] -= correction * A.inverse_mass;
        offset[deepest->body_b] += correction * B.inverse_mass;
    }
    return offset;
}

}  // namespace

World::World(WorldSettings settings) : settings_(settings) {}

std::size_t World::add_body(RigidBody body) {
    bodies_.push_back(std::move(body));
    return bodies_.size() - 1;
}

void World::add_drag_field(DragField field) { drag_fields_.push_back(std::move(field)); }

void World::step() {
    const double dt = settings_.dt;
    const std::size_t n = bodies_.size();
    std::vector<Vec2> v0(n);
    std::vector<double> w0(n);
    for (std::size_t i = 0; i < n; ++i) {
        v0[i] = bodies_[i].linear_velocity;
        w0[i] = bodies_[i].angular_velocity;
    }

    for (RigidBody& body : bodies_)
        if (!body.is_static()) body.linear_velocity += settings_.gravity * dt;

    for (const DragField& field : drag_fields_) {
        for (RigidBody& body : bodies_) {
            if (body.is_static() || body.tag != field.affects) continue;
            const double fraction = submerged_fraction(body, field.region);
            if (fraction <= 0.0) continue;
            // implicit in v so large coefficients stay stable
            const double damping = 1.0 / (1.0 + field.coefficient * fraction * dt * body.inverse_mass);
            body.linear_velocity *= damping;
            body.angular_velocity *= damping;
        }
    }

    const auto cache = build_cache(bodies_, dt, settings_.speculative_distance);
    std::vector<ContactManifold> manifolds = find_manifolds(bodies_, cache);

    std::vector<Vec2> v1(n);
    std::vector<double> w1(n);
    for (std::size_t i = 0; i < n; ++i) {
        v1[i] = bodies_[i].linear_velocity;
        w1[i] = bodies_[i].angular_velocity;
    }

    Solver solver(bodies_, settings_, true);
    solver.prepare(manifolds, v0, w0);
    for (int it = 0; it < settings_.solver_iterations; ++it) solver.solve();

    // Newton restitution combined with Coulomb friction can create energy
    // (Kane's example). Islands whose solve would gain energy are re-solved
    // without restitution.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (const ContactManifold& m : manifolds)
        if (!bodies_[m.body_a].is_static() && !bodies_[m.body_b].is_static())
            parent[find_root(parent, m.body_a)] = find_root(parent, m.body_b);
    std::vector<double> island_gain(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (!bodies_[i].is_static())
            island_gain[find_root(parent, i)] += step_energy_change(bodies_[i], v0[i], w0[i], settings_);
    std::vector<ContactManifold> redo;
    for (const ContactManifold& m : manifolds) {
        const std::size_t dyn = bodies_[m.body_a].is_static() ? m.body_b : m.body_a;
        if (island_gain[find_root(parent, dyn)] > kEnergyTolerance) redo.push_back(m);
    }
    if (!redo.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (bodies_[i].is_static() || !(island_gain[find_root(parent, i)] > kEnergyTolerance)) continue;
            bodies_[i].linear_velocity = v1[i];
            bodies_[i].angular_velocity = w1[i];
        }
        Solver inelastic(bodies_, settings_, false);
        inelastic.prepare(redo, v0, w0);
        for (int it = 0; it < settings_.solver_iterations; ++it) inelastic.solve();
    }

    // Correction may only spend energy the island dissipated this step;
    // lifting bodies out of overlap otherwise adds potential energy.
    std::fill(island_gain.begin(), island_gain.end(), 0.0);
    std::vector<double> island_lift(n, 0.0);
    const std::vector<Vec2> offset = positional_correction(bodies_, manifolds, settings_);
    for (std::size_t i = 0; i < n; ++i) {
        if (bodies_[i].is_static()) continue;
        const std::size_t root = find_root(parent, i);
        island_gain[root] += step_energy_change(bodies_[i], v0[i], w0[i], settings_);
        island_lift[root] -= bodies_[i].mass * dot(settings_.gravity, offset[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (bodies_[i].is_static()) continue;
        const std::size_t root = find_root(parent, i);
        double scale = 1.0;
        if (island_lift[root] > 0.0 && island_gain[root] + island_lift[root] > 0.0)
            scale = std::clamp(-island_gain[root] / island_lift[root], 0.0, 1.0);
        bodies_[i].position += offset[i] * scale;
    }

    for (RigidBody& body : bodies_) {
        if (body.is_static()) continue;
        body.position += body.linear_velocity * dt;
        body.angle += body.angular_velocity * dt;
    }

    last_contacts_ = std::move(manifolds);
    ++step_count_;
}

std::string World::state_hash() const {
    std::string bytes;
    auto put = [&bytes](double v) {
        char raw[sizeof(double)];
        std::memcpy(raw, &v, sizeof raw);
        bytes.append(raw, sizeof raw);
    };
    bytes.append(reinterpret_cast<const char*>(&step_count_), sizeof step_count_);
    for (const RigidBody& b : bodies_) {
        put(b.position.x);
        put(b.position.y);
        put(b.angle);
        put(b.linear_velocity.x);
        put(b.linear_velocity.y);
        put(b.angular_velocity);
    }
    return sha256_hex(bytes);
}

World step(World world) {
    world.step();
    return world;
}

std::vector<ContactManifold> detect_contacts(const World& world) {
    const auto cache = build_cache(world.bodies(), 0.0, 0.0);
    return find_manifolds(world.bodies(), cache);
}

std::vector<std::size_t> query_region(const World& world, const Polygon& region) {
    std::vector<std::size_t> hits;
    const Aabb region_bounds = region.bounds();
    for (std::size_t i = 0; i < world.body_count(); ++i) {
        const RigidBody& body = world.body(i);
        const Transform xf = body.transform();
        for (const Polygon& local : body.fixtures) {
            const Polygon p = local.transformed(xf);
            if (!p.bounds().overlaps(region_bounds)) continue;
            if (polygons_intersect(p, region)) {
                hits.push_back(i);
                break;
            }
        }
    }
    return hits;
}

double submerged_fraction(const RigidBody& body, const Polygon& region) {
    const Transform xf = body.transform();
    const Aabb region_bounds = region.bounds();
    double total = 0.0;
    double inside = 0.0;
    for (const Polygon& local : body.fixtures) {
        const Polygon p = local.transformed(xf);
        const double a = p.area();
        total += a;
        if (!p.bounds().overlaps(region_bounds)) continue;
        const auto clipped = clip_to_convex(p.vertices(), region);
        if (clipped.size() >= 3) inside += signed_area(clipped);
    }
    return total > 0.0 ? std::clamp(inside / total, 0.0, 1.0) : 0.0;
}

double total_energy(const World& world) {
    double e = 0.0;
    for (const RigidBody& b : world.bodies()) e += mechanical_energy(b, world.settings().gravity);
    return e;
}

}  // namespace coevo::physics
