#include "grainpd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "grainpd/error.hpp"

namespace grainpd {

namespace {

double contact_radius_for(const Scene& scene) {
  return scene.contact.radius.value_or(kContactRadiusFactor * scene_mesh_size(scene));
}

bool finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

}  // namespace

void validate(const Scene& scene) {
  if (scene.bodies.empty()) throw ConfigError("scene.bodies", "scene has no bodies");
  if (!(scene.integrator.dt > 0.0) || !std::isfinite(scene.integrator.dt)) {
    throw ConfigError("integrator.dt", "time step must be positive");
  }
  if (!(scene.integrator.t_final >= scene.integrator.dt) || !std::isfinite(scene.integrator.t_final)) {
    throw ConfigError("integrator.t_final", "final time must be at least one time step");
  }
  if (!finite(scene.gravity)) throw ConfigError("scene.gravity", "must be finite");
  for (std::size_t m = 0; m < scene.materials.size(); ++m) validate(scene.materials[m]);
  validate(scene.contact);
  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    const Body& body = scene.bodies[b];
    const std::string key = "scene.bodies[" + std::to_string(b) + "]";
    if (body.material >= scene.materials.size()) throw ConfigError(key + ".material", "unknown material");
    if (body.wall && !body.fixed) throw ConfigError(key + ".fixed", "walls must be fixed");
    if (body.cloud.nodes.size() < 2 || body.cloud.nodes.size() != body.cloud.volumes.size()) {
      throw ConfigError(key + ".shape", "body needs at least two nodes with volumes");
    }
    for (double v : body.cloud.volumes) {
      if (!(v > 0.0)) throw ConfigError(key + ".shape", "nodal volumes must be positive");
    }
    if (!finite(body.velocity)) throw ConfigError(key + ".velocity", "must be finite");
  }
}

double scene_mesh_size(const Scene& scene) {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& b : scene.bodies) h = std::min(h, b.cloud.mesh_size);
  return h;
}

double advisory_time_step(const Scene& scene) {
  const double h = scene_mesh_size(scene);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : scene.materials) {
    const double eps5 = std::pow(m.horizon, 5);
    best = std::min(best, 2.0 * std::sqrt(m.rho * std::numbers::pi * eps5 / (18.0 * m.kappa * h * h)));
  }
  return best;
}

DerivedParams derive_params(const Scene& scene) {
  validate(scene);
  DerivedParams p;
  p.mesh_size = scene_mesh_size(scene);
  p.contact_radius = contact_radius_for(scene);
  for (const auto& m : scene.materials) {
    p.critical_stretch.push_back(critical_stretch(m));
    p.spring_modulus.push_back(spring_modulus(m.kappa, m.horizon));
  }
  for (std::uint32_t a = 0; a < scene.bodies.size(); ++a) {
    const Body& ba = scene.bodies[a];
    p.node_count += ba.cloud.nodes.size();
    if (!ba.fixed) {
      p.bond_count += build_bond_graph(ba.cloud.nodes, ba.cloud.volumes, scene.materials[ba.material].horizon)
                          .bond_count();
    }
    if (ba.wall) continue;
    for (std::uint32_t b = a + 1; b < scene.bodies.size(); ++b) {
      const Body& bb = scene.bodies[b];
      if (bb.wall || (ba.fixed && bb.fixed)) continue;
      const Material& ma = scene.materials[ba.material];
      const Material& mb = scene.materials[bb.material];
      double va = 0.0;
      double vb = 0.0;
      for (double v : ba.cloud.volumes) va += v;
      for (double v : bb.cloud.volumes) vb += v;
      const double beta =
          dashpot_viscosity(scene.contact.c_bar, scene.contact.eps_bar_n, effective_bulk_modulus(ma.kappa, mb.kappa),
                            p.contact_radius, harmonic_mass(ma.rho * va, mb.rho * vb));
      p.center_viscosity.push_back({a, b, beta});
    }
  }
  p.advisory_dt = advisory_time_step(scene);
  return p;
}

void leapfrog_update(std::span<Vec2> u, std::span<Vec2> v, std::span<const Vec2> accel, double dt, bool bootstrap) {
  const double kick = bootstrap ? 0.5 * dt : dt;
  for (std::size_t i = 0; i < u.size(); ++i) {
    v[i] += kick * accel[i];
    u[i] += dt * v[i];
  }
}

Body make_body(std::string name, const ShapeSpec& shape, double target_h, std::uint32_t material, bool fixed,
               Vec2 velocity) {
  Body body;
  body.name = std::move(name);
  body.wall = shape.kind == ShapeKind::rectangle;
  body.fixed = fixed || body.wall;
  body.material = material;
  body.velocity = velocity;
  const Polygon outline = generate_shape(shape, target_h);
  body.cloud = to_meshless(triangulate(outline, target_h));
  return body;
}

Simulation::Simulation(Scene scene)
    : scene_((validate(scene), std::move(scene))),
      mesh_size_(scene_mesh_size(scene_)),
      contact_(scene_.contact, contact_radius_for(scene_)),
      rng_(scene_.seed) {
  const std::size_t nb = scene_.bodies.size();
  ranges_.resize(nb);
  graphs_.resize(nb);
  s0_.assign(nb, 0.0);
  broken_.assign(nb, 0);
  theta_.resize(nb);
  lengths_.resize(nb);
  motions_.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const Body& body = scene_.bodies[b];
    const Material& m = scene_.materials[body.material];
    Range& r = ranges_[b];
    r.begin = static_cast<std::uint32_t>(ref_.size());
    for (std::size_t k = 0; k < body.cloud.nodes.size(); ++k) {
      ref_.push_back(body.cloud.nodes[k]);
      vol_.push_back(body.cloud.volumes[k]);
      rho_.push_back(m.rho);
      body_of_.push_back(static_cast<std::uint32_t>(b));
      v_.push_back(body.velocity);
      r.volume += body.cloud.volumes[k];
    }
    r.end = static_cast<std::uint32_t>(ref_.size());
    if (body.fixed) {
      motions_[b] = {Vec2{}, body.velocity, 0.0};
    } else {
      graphs_[b] = build_bond_graph(body.cloud.nodes, body.cloud.volumes, m.horizon);
      s0_[b] = grainpd::critical_stretch(m);
    }
    contact_bodies_.push_back({r.begin, r.end, body.material, body.fixed, body.wall, r.volume});
  }
  const std::size_t n = ref_.size();
  u_.assign(n, Vec2{});
  cur_ = ref_;
  force_.assign(n, Vec2{});
  contact_force_.assign(n, Vec2{});
  accel_.assign(n, Vec2{});
}

std::int64_t Simulation::total_steps() const {
  return std::llround(scene_.integrator.t_final / scene_.integrator.dt);
}

const Material& Simulation::body_material(std::size_t b) const {
  return scene_.materials[scene_.bodies[b].material];
}

const BondGraph* Simulation::graph(std::size_t b) const { return graphs_[b] ? &*graphs_[b] : nullptr; }

std::optional<std::size_t> Simulation::find_body(const std::string& name) const {
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (scene_.bodies[b].name == name) return b;
  }
  return std::nullopt;
}

std::size_t Simulation::broken_bonds() const {
  std::size_t total = 0;
  for (auto c : broken_) total += c;
  return total;
}

std::size_t Simulation::total_bonds() const {
  std::size_t total = 0;
  for (const auto& g : graphs_) {
    if (g) total += g->bond_count();
  }
  return total;
}

ContactSystem Simulation::contact_system() const {
  return {cur_, v_, vol_, body_of_, contact_bodies_, scene_.materials};
}

void Simulation::refresh_current() {
  for (std::size_t i = 0; i < ref_.size(); ++i) cur_[i] = ref_[i] + u_[i];
}

void Simulation::apply_motions(double t) {
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (!scene_.bodies[b].fixed) continue;
    const Vec2 disp = motions_[b].displacement(t);
    for (std::uint32_t i = ranges_[b].begin; i < ranges_[b].end; ++i) {
      u_[i] = disp;
      v_[i] = motions_[b].velocity;
    }
  }
}

void Simulation::set_motion(std::size_t b, Vec2 shift, Vec2 velocity) {
  if (!scene_.bodies[b].fixed) throw ConfigError("scene.bodies", "prescribed motion needs a fixed body");
  motions_[b] = {shift, velocity, time()};
  apply_motions(time());
  refresh_current();
  forces_current_ = false;
}

void Simulation::aggregate_forces() {
  std::fill(force_.begin(), force_.end(), Vec2{});
  std::fill(contact_force_.begin(), contact_force_.end(), Vec2{});

  const ContactSystem sys = contact_system();
  contact_.update_pairs(sys, step_);
  contact_.accumulate(sys, contact_force_);

  const double rc = contact_.radius();
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (!graphs_[b]) continue;
    const BondGraph& g = *graphs_[b];
    const Material& m = body_material(b);
    const std::size_t off = ranges_[b].begin;
    const std::size_t len = ranges_[b].end - ranges_[b].begin;
    const std::span<const Vec2> cur(cur_.data() + off, len);
    const std::span<const double> vol(vol_.data() + off, len);
    if (!lengths_current_) bond_lengths(cur, g, lengths_[b]);
    compute_dilations(lengths_[b], vol, g, theta_[b]);
    assemble_internal_force(cur, lengths_[b], vol, g, m, theta_[b], std::span<Vec2>(force_.data() + off, len));
    if (broken_[b] > 0) {
      self_contact_forces(g, cur, vol, spring_modulus(m.kappa, m.horizon), rc,
                          std::span<Vec2>(contact_force_.data() + off, len));
    }
  }
  lengths_current_ = true;
  for (std::size_t i = 0; i < force_.size(); ++i) force_[i] += contact_force_[i];
  if (external_) external_(time(), cur_, v_, force_);
  forces_current_ = true;
}

void Simulation::ensure_forces() {
  if (!forces_current_) aggregate_forces();
}

std::vector<Vec2> Simulation::aggregate_force() const {
  std::vector<Vec2> out(force_.size());
  for (std::size_t i = 0; i < force_.size(); ++i) out[i] = force_[i] + rho_[i] * scene_.gravity;
  return out;
}

void Simulation::check_finite() const {
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (scene_.bodies[b].fixed) continue;
    for (std::uint32_t i = ranges_[b].begin; i < ranges_[b].end; ++i) {
      if (!finite(u_[i]) || !finite(v_[i])) {
        throw InstabilityError(step_, "non-finite state at node " + std::to_string(i) + " of body '" +
                                          scene_.bodies[b].name + "'; reduce integrator.dt");
      }
    }
  }
}

void Simulation::advance() {
  ensure_forces();
  const double dt = scene_.integrator.dt;
  const Vec2 g = scene_.gravity;
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (scene_.bodies[b].fixed) continue;
    const std::uint32_t lo = ranges_[b].begin;
    const std::uint32_t hi = ranges_[b].end;
    for (std::uint32_t i = lo; i < hi; ++i) accel_[i] = force_[i] / rho_[i] + g;
    leapfrog_update(std::span<Vec2>(u_.data() + lo, hi - lo), std::span<Vec2>(v_.data() + lo, hi - lo),
                    std::span<const Vec2>(accel_.data() + lo, hi - lo), dt, !bootstrapped_);
  }
  bootstrapped_ = true;
  ++step_;
  apply_motions(time());
  refresh_current();
  check_finite();
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (!graphs_[b]) continue;
    const std::size_t off = ranges_[b].begin;
    const std::size_t len = ranges_[b].end - ranges_[b].begin;
    bond_lengths(std::span<const Vec2>(cur_.data() + off, len), *graphs_[b], lengths_[b]);
    broken_[b] += update_bonds(lengths_[b], *graphs_[b], s0_[b]);
  }
  lengths_current_ = true;
  forces_current_ = false;
}

std::vector<double> Simulation::damage() const {
  std::vector<double> z(ref_.size(), 0.0);
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (!graphs_[b]) continue;
    const std::size_t off = ranges_[b].begin;
    const std::size_t len = ranges_[b].end - ranges_[b].begin;
    const auto local = damage_field(std::span<const Vec2>(ref_.data() + off, len),
                                    std::span<const Vec2>(u_.data() + off, len), *graphs_[b], s0_[b]);
    std::copy(local.begin(), local.end(), z.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return z;
}

std::vector<std::size_t> Simulation::fracture_zone_sizes() const {
  const auto z = damage();
  std::vector<std::size_t> out(scene_.bodies.size(), 0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] >= 1.0) ++out[body_of_[i]];
  }
  return out;
}

Vec2 Simulation::centroid(std::size_t b) const { return weighted_mean(cur_, vol_, ranges_[b].begin, ranges_[b].end); }

Vec2 Simulation::centroid_velocity(std::size_t b) const {
  return weighted_mean(v_, vol_, ranges_[b].begin, ranges_[b].end);
}

Vec2 Simulation::contact_resultant(std::size_t b) {
  ensure_forces();
  Vec2 total;
  for (std::uint32_t i = ranges_[b].begin; i < ranges_[b].end; ++i) total += vol_[i] * contact_force_[i];
  return total;
}

double Simulation::body_gap(std::size_t a, std::size_t b) const {
  // Brute force, pruned by a bounding circle around b.
  const Vec2 cb = centroid(b);
  double reach = 0.0;
  for (std::uint32_t j = ranges_[b].begin; j < ranges_[b].end; ++j) reach = std::max(reach, (cur_[j] - cb).norm());
  double best2 = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = ranges_[a].begin; i < ranges_[a].end; ++i) {
    const double lower = (cur_[i] - cb).norm() - reach;
    if (lower > 0.0 && lower * lower >= best2) continue;
    for (std::uint32_t j = ranges_[b].begin; j < ranges_[b].end; ++j) {
      best2 = std::min(best2, (cur_[j] - cur_[i]).norm2());
    }
  }
  return std::sqrt(best2);
}

Simulation::Energy Simulation::energy() {
  ensure_forces();
  Energy e;
  for (std::size_t i = 0; i < ref_.size(); ++i) {
    e.kinetic += 0.5 * rho_[i] * vol_[i] * v_[i].norm2();
    e.potential -= rho_[i] * vol_[i] * dot(scene_.gravity, cur_[i]);
  }
  e.contact = contact_.spring_energy(contact_system());
  for (std::size_t b = 0; b < scene_.bodies.size(); ++b) {
    if (!graphs_[b]) continue;
    const std::size_t off = ranges_[b].begin;
    const std::size_t len = ranges_[b].end - ranges_[b].begin;
    e.elastic += elastic_energy(std::span<const Vec2>(cur_.data() + off, len),
                                std::span<const double>(vol_.data() + off, len), *graphs_[b], body_material(b),
                                theta_[b]);
  }
  return e;
}

Checkpoint Simulation::checkpoint() const {
  Checkpoint cp;
  cp.step = step_;
  cp.bootstrapped = bootstrapped_;
  cp.u = u_;
  cp.v = v_;
  for (const auto& g : graphs_) cp.bonds.push_back(g ? g->intact : std::vector<std::uint8_t>{});
  cp.motions = motions_;
  std::ostringstream rng;
  rng << rng_;
  cp.rng_state = rng.str();
  cp.contact_candidates = contact_.candidates();
  cp.contact_last_build = contact_.last_build_step();
  return cp;
}

void Simulation::restore(const Checkpoint& cp) {
  if (cp.u.size() != ref_.size() || cp.v.size() != ref_.size()) {
    throw IoError("checkpoint has " + std::to_string(cp.u.size()) + " nodes, scene has " +
                  std::to_string(ref_.size()));
  }
  if (cp.bonds.size() != graphs_.size() || cp.motions.size() != motions_.size()) {
    throw IoError("checkpoint body count does not match the scene");
  }
  for (std::size_t b = 0; b < graphs_.size(); ++b) {
    const std::size_t expect = graphs_[b] ? graphs_[b]->bond_slots() : 0;
    if (cp.bonds[b].size() != expect) throw IoError("checkpoint bond flags do not match body " + std::to_string(b));
  }
  step_ = cp.step;
  bootstrapped_ = cp.bootstrapped;
  u_ = cp.u;
  v_ = cp.v;
  for (std::size_t b = 0; b < graphs_.size(); ++b) {
    if (!graphs_[b]) continue;
    graphs_[b]->intact = cp.bonds[b];
    broken_[b] = graphs_[b]->broken_count();
  }
  motions_ = cp.motions;
  std::istringstream rng(cp.rng_state);
  rng >> rng_;
  if (!rng) throw IoError("checkpoint random state is unreadable");
  contact_.restore(cp.contact_candidates, cp.contact_last_build);
  refresh_current();
  lengths_current_ = false;
  forces_current_ = false;
}

}  // namespace grainpd
