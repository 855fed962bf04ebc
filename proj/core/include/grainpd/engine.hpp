#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grainpd/contact.hpp"
#include "grainpd/geometry.hpp"
#include "grainpd/peridynamics.hpp"
#include "grainpd/vec2.hpp"

namespace grainpd {

/// Prescribed displacement of a fixed body: u(t) = shift + velocity (t - t0).
struct MotionLaw {
  Vec2 shift;
  Vec2 velocity;
  double t0 = 0.0;

  [[nodiscard]] Vec2 displacement(double t) const { return shift + (t - t0) * velocity; }
  friend bool operator==(const MotionLaw&, const MotionLaw&) = default;
};

/// A particle or a wall. Fixed bodies are rigid: no bonds, no internal force,
/// and their nodes follow the motion law. Walls are always fixed.
struct Body {
  std::string name;
  bool wall = false;
  bool fixed = false;
  std::uint32_t material = 0;
  MeshlessCloud cloud;
  Vec2 velocity;  ///< initial velocity (free bodies) or prescribed velocity (fixed)
};

struct IntegratorConfig {
  double dt = 0.0;
  double t_final = 0.0;

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

struct Scene {
  std::vector<Material> materials;
  std::vector<Body> bodies;
  Vec2 gravity;
  ContactConfig contact;
  IntegratorConfig integrator;
  std::uint64_t seed = 0;
};

/// Throws ConfigError on an inconsistent scene (no bodies, bad dt, walls not
/// fixed, unknown material index, ...).
void validate(const Scene& scene);

/// Minimum mesh size over all bodies.
[[nodiscard]] double scene_mesh_size(const Scene& scene);

/// Largest dt the advisory check accepts: twice the inverse natural frequency
/// of one node on the stiffest contact spring, 2 sqrt(rho pi eps^5 / (18 kappa h^2)),
/// minimised over materials.
[[nodiscard]] double advisory_time_step(const Scene& scene);

/// Quantities derived from a scene before stepping.
struct DerivedParams {
  double mesh_size = 0.0;
  double contact_radius = 0.0;
  std::vector<double> critical_stretch;  ///< per material
  std::vector<double> spring_modulus;    ///< per material, own bulk modulus
  /// Centre-damping viscosity for every pair of distinct bodies that are not
  /// both fixed, as (body a, body b, beta_bar).
  struct PairViscosity {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double beta_bar = 0.0;
  };
  std::vector<PairViscosity> center_viscosity;
  std::size_t node_count = 0;
  std::size_t bond_count = 0;
  double advisory_dt = 0.0;
};

[[nodiscard]] DerivedParams derive_params(const Scene& scene);

/// One velocity-form central-difference update for free nodes.
/// With `bootstrap` the velocity is advanced by half a step (v^{1/2} = v^0 + dt/2 a^0),
/// otherwise by a full step; the displacement always by a full step.
void leapfrog_update(std::span<Vec2> u, std::span<Vec2> v, std::span<const Vec2> accel, double dt, bool bootstrap);

/// Everything needed to continue a run bitwise.
struct Checkpoint {
  std::int64_t step = 0;
  bool bootstrapped = false;
  std::vector<Vec2> u;
  std::vector<Vec2> v;
  std::vector<std::vector<std::uint8_t>> bonds;  ///< per body, empty for fixed bodies
  std::vector<MotionLaw> motions;                ///< per body
  std::string rng_state;
  ContactPairList contact_candidates;
  std::int64_t contact_last_build = -1;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// External force density hook: adds to `force` given time, current positions and velocities.
using ExternalForce =
    std::function<void(double t, std::span<const Vec2> cur, std::span<const Vec2> vel, std::span<Vec2> force)>;

/// Meshes a shape into a body. Rectangles become walls, which are always fixed.
[[nodiscard]] Body make_body(std::string name, const ShapeSpec& shape, double target_h, std::uint32_t material,
                             bool fixed, Vec2 velocity);

class Simulation {
 public:
  explicit Simulation(Scene scene);

  [[nodiscard]] const Scene& scene() const { return scene_; }
  [[nodiscard]] std::size_t node_count() const { return ref_.size(); }
  [[nodiscard]] std::size_t body_count() const { return scene_.bodies.size(); }
  [[nodiscard]] std::int64_t step() const { return step_; }
  [[nodiscard]] double time() const { return static_cast<double>(step_) * scene_.integrator.dt; }
  [[nodiscard]] double dt() const { return scene_.integrator.dt; }
  [[nodiscard]] std::int64_t total_steps() const;

  [[nodiscard]] std::span<const Vec2> reference() const { return ref_; }
  [[nodiscard]] std::span<const Vec2> displacement() const { return u_; }
  /// v^{n-1/2} after the first step, v^0 before it.
  [[nodiscard]] std::span<const Vec2> velocity() const { return v_; }
  [[nodiscard]] std::span<const Vec2> current() const { return cur_; }
  [[nodiscard]] std::span<const double> volume() const { return vol_; }
  [[nodiscard]] std::span<const std::uint32_t> body_of() const { return body_of_; }
  /// Force densities at the current state, gravity excluded: everything, and
  /// the contact part only. Valid after `ensure_forces`.
  [[nodiscard]] std::span<const Vec2> force() const { return force_; }
  [[nodiscard]] std::span<const Vec2> contact_force() const { return contact_force_; }
  /// force() plus rho g.
  [[nodiscard]] std::vector<Vec2> aggregate_force() const;

  [[nodiscard]] std::uint32_t body_begin(std::size_t b) const { return ranges_[b].begin; }
  [[nodiscard]] std::uint32_t body_end(std::size_t b) const { return ranges_[b].end; }
  [[nodiscard]] double body_volume(std::size_t b) const { return ranges_[b].volume; }
  [[nodiscard]] const Material& body_material(std::size_t b) const;
  /// Bond graph of a deformable body, nullptr for fixed bodies.
  [[nodiscard]] const BondGraph* graph(std::size_t b) const;
  [[nodiscard]] double critical_stretch(std::size_t b) const { return s0_[b]; }
  [[nodiscard]] const MotionLaw& motion(std::size_t b) const { return motions_[b]; }
  /// Moves a fixed body to displacement `shift` now and lets it continue with `velocity`.
  void set_motion(std::size_t b, Vec2 shift, Vec2 velocity);
  [[nodiscard]] std::optional<std::size_t> find_body(const std::string& name) const;

  [[nodiscard]] double mesh_size() const { return mesh_size_; }
  [[nodiscard]] const ContactModel& contact() const { return contact_; }
  [[nodiscard]] std::size_t broken_bonds() const;
  [[nodiscard]] std::size_t total_bonds() const;

  void set_external_force(ExternalForce f) { external_ = std::move(f); }

  /// Evaluates the force densities at the current state (done by `advance` too).
  void aggregate_forces();
  /// aggregate_forces() unless the current state was already evaluated.
  void ensure_forces();

  /// One time step. Throws InstabilityError if the state stops being finite.
  void advance();

  /// Damage Z per node (zero on fixed bodies).
  [[nodiscard]] std::vector<double> damage() const;
  /// Number of nodes with Z >= 1 per body.
  [[nodiscard]] std::vector<std::size_t> fracture_zone_sizes() const;

  [[nodiscard]] Vec2 centroid(std::size_t b) const;
  [[nodiscard]] Vec2 centroid_velocity(std::size_t b) const;
  /// Total contact force (density x volume) acting on the nodes of body b.
  [[nodiscard]] Vec2 contact_resultant(std::size_t b);
  /// Minimum distance between nodes of two bodies.
  [[nodiscard]] double body_gap(std::size_t a, std::size_t b) const;

  struct Energy {
    double kinetic = 0.0;
    double potential = 0.0;  ///< gravitational, -sum rho V g.z
    double contact = 0.0;
    double elastic = 0.0;
    [[nodiscard]] double total() const { return kinetic + potential + contact + elastic; }
  };
  [[nodiscard]] Energy energy();

  [[nodiscard]] Checkpoint checkpoint() const;
  /// Throws IoError if the checkpoint does not match this scene.
  void restore(const Checkpoint& cp);

 private:
  struct Range {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    double volume = 0.0;
  };

  [[nodiscard]] ContactSystem contact_system() const;
  void apply_motions(double t);
  void refresh_current();
  void check_finite() const;

  Scene scene_;
  std::vector<Range> ranges_;
  std::vector<ContactBody> contact_bodies_;
  std::vector<Vec2> ref_, u_, v_, cur_, force_, contact_force_, accel_;
  std::vector<double> vol_, rho_;
  std::vector<std::uint32_t> body_of_;
  std::vector<std::optional<BondGraph>> graphs_;
  std::vector<double> s0_;
  std::vector<std::size_t> broken_;
  std::vector<std::vector<double>> theta_;
  std::vector<std::vector<double>> lengths_;  ///< current bond lengths per body
  bool lengths_current_ = false;
  std::vector<MotionLaw> motions_;
  double mesh_size_ = 0.0;
  ContactModel contact_;
  std::int64_t step_ = 0;
  bool bootstrapped_ = false;
  bool forces_current_ = false;
  std::mt19937_64 rng_;
  ExternalForce external_;
};

}  // namespace grainpd
