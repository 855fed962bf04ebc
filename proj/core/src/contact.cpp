#include "grainpd/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "grainpd/error.hpp"
#include "grainpd/spatial.hpp"

namespace grainpd {

std::string to_string(DampingModel model) {
  switch (model) {
    case DampingModel::center: return "center";
    case DampingModel::node: return "node";
    case DampingModel::off: return "off";
  }
  return "off";
}

DampingModel damping_model_from_string(const std::string& name) {
  if (name == "center") return DampingModel::center;
  if (name == "node") return DampingModel::node;
  if (name == "off") return DampingModel::off;
  throw ConfigError("contact.damping_model", "expected one of center, node, off; got '" + name + "'");
}

void validate(const ContactConfig& cfg) {
  if (cfg.radius && !(*cfg.radius > 0.0)) throw ConfigError("contact.radius", "must be positive");
  if (!(cfg.friction_mu >= 0.0)) throw ConfigError("contact.friction_mu", "must be non-negative");
  if (!(cfg.eps_bar_n > 0.0 && cfg.eps_bar_n <= 1.0)) throw ConfigError("contact.eps_bar_n", "must lie in (0, 1]");
  if (!(cfg.eps_n > 0.0 && cfg.eps_n <= 1.0)) throw ConfigError("contact.eps_n", "must lie in (0, 1]");
  if (!(cfg.c_bar > 0.0)) throw ConfigError("contact.c_bar", "must be positive");
  if (!(cfg.c > 0.0)) throw ConfigError("contact.c", "must be positive");
  if (cfg.rebuild_every < 1) throw ConfigError("contact.rebuild_every", "must be at least 1");
}

double effective_bulk_modulus(double kappa1, double kappa2) { return 2.0 * kappa1 * kappa2 / (kappa1 + kappa2); }

double spring_modulus(double kappa, double horizon) {
  return 18.0 * kappa / (std::numbers::pi * std::pow(horizon, 5));
}

double harmonic_mass(double m1, double m2) { return 2.0 * m1 * m2 / (m1 + m2); }

double dashpot_viscosity(double c, double eps, double kappa_eff, double contact_radius, double mass_eq) {
  if (eps >= 1.0) return 0.0;
  const double log_eps = std::log(eps);
  return -2.0 * c * log_eps *
         std::sqrt(kappa_eff * contact_radius * mass_eq / (std::numbers::pi * std::numbers::pi + log_eps * log_eps));
}

ContactParams derive_contact_params(const Material& a, const Material& b, double mesh_h) {
  ContactParams p;
  p.radius = kContactRadiusFactor * mesh_h;
  p.kappa_eff = effective_bulk_modulus(a.kappa, b.kappa);
  p.stiffness = spring_modulus(p.kappa_eff, 0.5 * (a.horizon + b.horizon));
  return p;
}

ContactPairList find_contact_pairs(std::span<const Vec2> cur, std::span<const std::uint32_t> body_of, double radius,
                                   std::span<const std::uint8_t> skip_body) {
  ContactPairList out;
  const std::size_t n = cur.size();
  if (n == 0) return out;

  // Broad phase on body bounding boxes: a node can only pair up if it lies in
  // the box of some other body grown by the radius.
  std::uint32_t nb = 0;
  for (auto b : body_of) nb = std::max(nb, b + 1);
  std::vector<Vec2> box_lo(nb, Vec2{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  std::vector<Vec2> box_hi(nb, Vec2{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  std::vector<std::uint32_t> start(nb + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = body_of[i];
    box_lo[b] = {std::min(box_lo[b].x, cur[i].x), std::min(box_lo[b].y, cur[i].y)};
    box_hi[b] = {std::max(box_hi[b].x, cur[i].x), std::max(box_hi[b].y, cur[i].y)};
    ++start[b + 1];
  }
  for (std::uint32_t b = 0; b < nb; ++b) start[b + 1] += start[b];
  std::vector<std::uint32_t> members(n);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::uint32_t i = 0; i < n; ++i) members[fill[body_of[i]]++] = i;
  }
  auto skipped = [&](std::uint32_t b) { return !skip_body.empty() && skip_body[b] != 0; };
  std::vector<std::uint8_t> candidate(n, 0);
  auto mark_inside = [&](std::uint32_t a, std::uint32_t b) {
    // nodes of a inside the grown box of b
    const Vec2 lo{box_lo[b].x - radius, box_lo[b].y - radius};
    const Vec2 hi{box_hi[b].x + radius, box_hi[b].y + radius};
    for (std::uint32_t k = start[a]; k < start[a + 1]; ++k) {
      const Vec2& p = cur[members[k]];
      if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y) candidate[members[k]] = 1;
    }
  };
  for (std::uint32_t a = 0; a < nb; ++a) {
    if (start[a] == start[a + 1]) continue;
    for (std::uint32_t b = a + 1; b < nb; ++b) {
      if (start[b] == start[b + 1] || (skipped(a) && skipped(b))) continue;
      if (box_lo[a].x - radius > box_hi[b].x || box_lo[b].x - radius > box_hi[a].x ||
          box_lo[a].y - radius > box_hi[b].y || box_lo[b].y - radius > box_hi[a].y) {
        continue;
      }
      mark_inside(a, b);
      mark_inside(b, a);
    }
  }
  std::vector<std::uint32_t> subset;
  std::vector<Vec2> pts;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!candidate[i]) continue;
    subset.push_back(i);
    pts.push_back(cur[i]);
  }
  if (subset.size() < 2) return out;

  const CellGrid grid(pts, radius);
  std::vector<std::uint32_t> hits;
  for (std::uint32_t si = 0; si < subset.size(); ++si) {
    const std::uint32_t i = subset[si];
    const std::uint32_t bi = body_of[i];
    hits.clear();
    grid.for_each_within(pts[si], radius, [&](std::uint32_t sj) {
      if (sj <= si) return;
      const std::uint32_t bj = body_of[subset[sj]];
      if (bj == bi || (skipped(bi) && skipped(bj))) return;
      hits.push_back(subset[sj]);
    });
    std::sort(hits.begin(), hits.end());
    for (auto j : hits) {
      const Vec2 d = cur[j] - cur[i];
      const double len = d.norm();
      out.push_back({i, j, bi, body_of[j], len, len > 0.0 ? d / len : Vec2{}});
    }
  }
  return out;
}

Vec2 normal_force(const Vec2& z, const Vec2& z_other, double stiffness, double vol_other, double radius) {
  const Vec2 d = z_other - z;
  const double len = d.norm();
  if (len == 0.0) throw SingularContactError("contacting nodes coincide");
  const double delta = len - radius;
  if (!(delta < 0.0)) return {};
  return (stiffness * delta * vol_other / len) * d;
}

Vec2 friction_force(const Vec2& e_n, const Vec2& fn, const Vec2& v, const Vec2& v_other, double mu) {
  const Vec2 rel = v - v_other;
  const double speed = rel.norm();
  if (speed == 0.0 || mu == 0.0) return {};
  const Vec2 unit = rel / speed;
  const Vec2 e_t = unit - dot(unit, e_n) * e_n;
  return (-mu * fn.norm()) * e_t;
}

Vec2 damping_node(const Vec2& z, const Vec2& z_other, const Vec2& v, const Vec2& v_other, double radius,
                  double beta_n, double vol) {
  const Vec2 d = z_other - z;
  const double len = d.norm();
  if (len == 0.0) throw SingularContactError("contacting nodes coincide");
  const Vec2 e_n = d / len;
  const double delta = len - radius;
  const double delta_dot = dot(v_other - v, e_n);
  if (!(delta_dot < 0.0 && delta < 0.0)) return {};
  return (beta_n * delta_dot / vol) * e_n;
}

Vec2 damping_center(const Vec2& zc, const Vec2& zc_other, const Vec2& vc, const Vec2& vc_other,
                    double body_distance, double radius, double beta_bar, double body_volume) {
  if (!(body_distance < radius)) return {};
  const Vec2 d = zc_other - zc;
  const double len = d.norm();
  if (len == 0.0) throw SingularContactError("body centres coincide");
  const Vec2 e = d / len;
  const double rate = dot(vc_other - vc, e);
  if (!(rate < 0.0)) return {};
  return (beta_bar * rate / body_volume) * e;
}

void self_contact_forces(const BondGraph& g, std::span<const Vec2> cur, std::span<const double> volumes,
                         double stiffness, double radius, std::span<Vec2> force) {
  const auto n = static_cast<std::int64_t>(g.node_count());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      if (g.intact[b]) continue;
      const std::uint32_t j = g.neighbors[b];
      if ((cur[j] - cur[i]).norm2() >= radius * radius) continue;
      force[i] += normal_force(cur[i], cur[j], stiffness, volumes[j], radius);
    }
  }
}

Vec2 weighted_mean(std::span<const Vec2> values, std::span<const double> volume, std::uint32_t begin,
                   std::uint32_t end) {
  Vec2 acc;
  double total = 0.0;
  for (std::uint32_t k = begin; k < end; ++k) {
    acc += volume[k] * values[k];
    total += volume[k];
  }
  return acc / total;
}

ContactModel::ContactModel(ContactConfig config, double contact_radius)
    : config_(std::move(config)), radius_(contact_radius) {
  validate(config_);
  if (!(radius_ > 0.0)) throw ConfigError("contact.radius", "contact radius must be positive");
}

void ContactModel::restore(ContactPairList candidates, std::int64_t last_build_step) {
  candidates_ = std::move(candidates);
  last_build_ = last_build_step;
}

const ContactPairList& ContactModel::update_pairs(const ContactSystem& sys, std::int64_t step) {
  std::vector<std::uint8_t> skip(sys.bodies.size());
  for (std::size_t b = 0; b < sys.bodies.size(); ++b) skip[b] = sys.bodies[b].fixed ? 1 : 0;

  if (config_.rebuild_every <= 1) {
    pairs_ = find_contact_pairs(sys.cur, sys.body_of, radius_, skip);
    last_build_ = step;
    return pairs_;
  }
  if (last_build_ < 0 || step - last_build_ >= config_.rebuild_every || step < last_build_) {
    candidates_ = find_contact_pairs(sys.cur, sys.body_of, 1.5 * radius_, skip);
    last_build_ = step;
  }
  pairs_.clear();
  for (const auto& c : candidates_) {
    const Vec2 d = sys.cur[c.b] - sys.cur[c.a];
    const double len = d.norm();
    if (len < radius_) pairs_.push_back({c.a, c.b, c.body_a, c.body_b, len, len > 0.0 ? d / len : Vec2{}});
  }
  return pairs_;
}

ContactParams ContactModel::params_for(const ContactSystem& sys, std::uint32_t body_a, std::uint32_t body_b) const {
  const Material& ma = sys.materials[sys.bodies[body_a].material];
  const Material& mb = sys.materials[sys.bodies[body_b].material];
  ContactParams p;
  p.radius = radius_;
  p.kappa_eff = effective_bulk_modulus(ma.kappa, mb.kappa);
  p.stiffness = spring_modulus(p.kappa_eff, 0.5 * (ma.horizon + mb.horizon));
  return p;
}

void ContactModel::accumulate(const ContactSystem& sys, std::span<Vec2> force) const {
  const std::size_t n = sys.cur.size();
  if (!pairs_.empty()) {
    // Per-node partner lists; both ends of every pair see it, so each node's
    // force is a fixed-order sum with no shared writes.
    std::vector<std::uint32_t> start(n + 1, 0);
    for (const auto& p : pairs_) {
      ++start[p.a + 1];
      ++start[p.b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
    std::vector<std::uint32_t> partner(start[n]);
    {
      std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
      for (const auto& p : pairs_) {
        partner[fill[p.a]++] = p.b;
        partner[fill[p.b]++] = p.a;
      }
    }

    // Material-pair parameter table.
    const std::size_t nm = sys.materials.size();
    std::vector<ContactParams> table(nm * nm);
    for (std::size_t a = 0; a < nm; ++a) {
      for (std::size_t b = 0; b < nm; ++b) {
        const Material& ma = sys.materials[a];
        const Material& mb = sys.materials[b];
        table[a * nm + b] = {radius_, spring_modulus(effective_bulk_modulus(ma.kappa, mb.kappa),
                                                     0.5 * (ma.horizon + mb.horizon)),
                             effective_bulk_modulus(ma.kappa, mb.kappa)};
      }
    }

    const bool friction = config_.friction_enabled && config_.friction_mu > 0.0;
    const bool node_damping = config_.damping_model == DampingModel::node && config_.eps_n < 1.0;
    bool singular = false;
    const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) reduction(|| : singular)
    for (std::int64_t ii = 0; ii < nn; ++ii) {
      const auto i = static_cast<std::uint32_t>(ii);
      if (start[i] == start[i + 1]) continue;
      const std::uint32_t mi = sys.bodies[sys.body_of[i]].material;
      const double rho_i = sys.materials[mi].rho;
      Vec2 acc;
      for (std::uint32_t k = start[i]; k < start[i + 1]; ++k) {
        const std::uint32_t j = partner[k];
        const std::uint32_t mj = sys.bodies[sys.body_of[j]].material;
        const ContactParams& p = table[mi * nm + mj];
        const Vec2 d = sys.cur[j] - sys.cur[i];
        const double len = d.norm();
        if (len == 0.0) {
          singular = true;
          continue;
        }
        const Vec2 fn = normal_force(sys.cur[i], sys.cur[j], p.stiffness, sys.volume[j], radius_);
        acc += fn;
        if (friction) acc += friction_force(d / len, fn, sys.vel[i], sys.vel[j], config_.friction_mu);
        if (node_damping) {
          const double m_eq =
              harmonic_mass(rho_i * sys.volume[i], sys.materials[mj].rho * sys.volume[j]);
          const double beta = dashpot_viscosity(config_.c, config_.eps_n, p.kappa_eff, radius_, m_eq);
          acc += damping_node(sys.cur[i], sys.cur[j], sys.vel[i], sys.vel[j], radius_, beta, sys.volume[i]);
        }
      }
      force[i] += acc;
    }
    if (singular) throw SingularContactError("contacting nodes coincide");
  }
  if (config_.damping_model == DampingModel::center && config_.eps_bar_n < 1.0) {
    accumulate_center_damping(sys, force);
  }
}

void ContactModel::accumulate_center_damping(const ContactSystem& sys, std::span<Vec2> force) const {
  if (pairs_.empty()) return;
  // Closest approach per body pair, and per (particle, wall node).
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> body_dist;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> wall_node_dist;  // (particle body, wall node)
  for (const auto& p : pairs_) {
    const bool wall_a = sys.bodies[p.body_a].wall;
    const bool wall_b = sys.bodies[p.body_b].wall;
    if (wall_a == wall_b) {
      auto [it, fresh] = body_dist.try_emplace({p.body_a, p.body_b}, p.distance);
      if (!fresh) it->second = std::min(it->second, p.distance);
    } else {
      const auto key = wall_a ? std::pair{p.body_b, p.a} : std::pair{p.body_a, p.b};
      auto [it, fresh] = wall_node_dist.try_emplace(key, p.distance);
      if (!fresh) it->second = std::min(it->second, p.distance);
    }
  }

  std::vector<Vec2> body_force(sys.bodies.size());
  std::vector<Vec2> centre_pos(sys.bodies.size());
  std::vector<Vec2> centre_vel(sys.bodies.size());
  std::vector<std::uint8_t> have_centre(sys.bodies.size(), 0);
  auto centre = [&](std::uint32_t b) {
    if (!have_centre[b]) {
      centre_pos[b] = weighted_mean(sys.cur, sys.volume, sys.bodies[b].begin, sys.bodies[b].end);
      centre_vel[b] = weighted_mean(sys.vel, sys.volume, sys.bodies[b].begin, sys.bodies[b].end);
      have_centre[b] = 1;
    }
  };
  auto mass_of = [&](std::uint32_t b) { return sys.materials[sys.bodies[b].material].rho * sys.bodies[b].volume; };

  for (const auto& [key, dist] : body_dist) {
    const auto [a, b] = key;
    centre(a);
    centre(b);
    const ContactParams p = params_for(sys, a, b);
    const double beta = dashpot_viscosity(config_.c_bar, config_.eps_bar_n, p.kappa_eff, radius_,
                                          harmonic_mass(mass_of(a), mass_of(b)));
    body_force[a] += damping_center(centre_pos[a], centre_pos[b], centre_vel[a], centre_vel[b], dist, radius_, beta,
                                    sys.bodies[a].volume);
    body_force[b] += damping_center(centre_pos[b], centre_pos[a], centre_vel[b], centre_vel[a], dist, radius_, beta,
                                    sys.bodies[b].volume);
  }
  for (const auto& [key, dist] : wall_node_dist) {
    const auto [a, w] = key;
    const std::uint32_t wall = sys.body_of[w];
    centre(a);
    const ContactParams p = params_for(sys, a, wall);
    const double node_mass = sys.materials[sys.bodies[wall].material].rho * sys.volume[w];
    const double beta = dashpot_viscosity(config_.c_bar, config_.eps_bar_n, p.kappa_eff, radius_,
                                          harmonic_mass(mass_of(a), node_mass));
    const Vec2 f = damping_center(centre_pos[a], sys.cur[w], centre_vel[a], sys.vel[w], dist, radius_, beta,
                                  sys.bodies[a].volume);
    body_force[a] += f;
    // Reaction on the wall node, as a density over that node's volume.
    force[w] -= (sys.bodies[a].volume / sys.volume[w]) * f;
  }
  for (std::size_t b = 0; b < sys.bodies.size(); ++b) {
    if (body_force[b] == Vec2{}) continue;
    for (std::uint32_t k = sys.bodies[b].begin; k < sys.bodies[b].end; ++k) force[k] += body_force[b];
  }
}

std::optional<double> ContactModel::body_distance(std::uint32_t body_a, std::uint32_t body_b) const {
  if (body_a > body_b) std::swap(body_a, body_b);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs_) {
    if (p.body_a == body_a && p.body_b == body_b) best = std::min(best, p.distance);
  }
  if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
  return best;
}

double ContactModel::spring_energy(const ContactSystem& sys) const {
  double e = 0.0;
  for (const auto& p : pairs_) {
    const ContactParams k = params_for(sys, p.body_a, p.body_b);
    const double delta = p.distance - radius_;
    if (delta < 0.0) e += 0.5 * k.stiffness * delta * delta * sys.volume[p.a] * sys.volume[p.b];
  }
  return e;
}

}  // namespace grainpd
