#include "grainpd/peridynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grainpd/error.hpp"
#include "grainpd/spatial.hpp"

namespace grainpd {

void validate(const Material& m) {
  if (!(m.rho > 0.0)) throw MaterialError("density must be positive");
  if (!(m.kappa > 0.0)) throw MaterialError("bulk modulus must be positive");
  if (!(m.shear > 0.0)) throw MaterialError("shear modulus must be positive");
  if (!(m.gc >= 0.0)) throw MaterialError("critical energy release rate must be non-negative");
  if (!(m.horizon > 0.0)) throw MaterialError("horizon must be positive");
}

double critical_stretch(const Material& m) {
  const double bracket = 3.0 * m.shear + std::pow(0.75, 4) * (m.kappa - 5.0 * m.shear / 3.0);
  const double denom = bracket * m.horizon;
  if (!(denom > 0.0)) throw MaterialError("critical stretch undefined: non-positive denominator");
  if (m.gc < 0.0) throw MaterialError("critical energy release rate must be non-negative");
  return std::sqrt(m.gc / denom);
}

std::size_t BondGraph::broken_count() const {
  return static_cast<std::size_t>(std::count(intact.begin(), intact.end(), std::uint8_t{0})) / 2;
}

BondGraph build_bond_graph(std::span<const Vec2> ref, std::span<const double> volumes, double horizon) {
  if (!(horizon > 0.0)) throw MaterialError("horizon must be positive");
  const std::size_t n = ref.size();
  BondGraph g;
  g.horizon = horizon;
  g.offsets.assign(1, 0);
  g.weighted_volume.assign(n, 0.0);
  const CellGrid grid(ref, horizon);
  std::vector<std::uint32_t> hits;
  for (std::size_t i = 0; i < n; ++i) {
    hits.clear();
    grid.for_each_within(ref[i], horizon, [&](std::uint32_t j) {
      if (j != i) hits.push_back(j);
    });
    if (hits.empty()) {
      throw MaterialError("node " + std::to_string(i) + " has no neighbour within the horizon");
    }
    std::sort(hits.begin(), hits.end());
    double m = 0.0;
    for (auto j : hits) {
      const double r = distance(ref[i], ref[j]);
      const double w = influence(r / horizon);
      g.neighbors.push_back(j);
      g.ref_length.push_back(r);
      g.weight.push_back(w);
      m += r * r * w * volumes[j];
    }
    g.weighted_volume[i] = m;
    g.offsets.push_back(static_cast<std::uint32_t>(g.neighbors.size()));
  }
  g.intact.assign(g.neighbors.size(), 1);
  return g;
}

double dilation(std::size_t i, std::span<const Vec2> cur, std::span<const double> volumes,
                const BondGraph& g) {
  double sum = 0.0;
  for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
    if (!g.intact[b]) continue;
    const std::uint32_t j = g.neighbors[b];
    const double r = g.ref_length[b];
    sum += r * ((cur[j] - cur[i]).norm() - r) * g.weight[b] * volumes[j];
  }
  return 3.0 * sum / g.weighted_volume[i];
}

Vec2 force_state(std::size_t i, std::size_t slot, double theta_i, std::span<const Vec2> cur,
                 const BondGraph& g, const Material& m) {
  if (!g.intact[slot]) return {};
  const std::uint32_t j = g.neighbors[slot];
  const Vec2 dz = cur[j] - cur[i];
  const double len = dz.norm();
  if (len == 0.0) throw SingularBondError("bonded nodes coincide");
  const double r = g.ref_length[slot];
  const double mx = g.weighted_volume[i];
  const double scalar = g.weight[slot] * (r * theta_i * (3.0 * m.kappa / mx - 15.0 * m.shear / (3.0 * mx)) +
                                          (len - r) * (15.0 * m.shear / mx));
  return (scalar / len) * dz;
}

void compute_dilations(std::span<const Vec2> cur, std::span<const double> volumes, const BondGraph& g,
                       std::vector<double>& theta) {
  std::vector<double> len;
  bond_lengths(cur, g, len);
  compute_dilations(len, volumes, g, theta);
}

void assemble_internal_force(std::span<const Vec2> cur, std::span<const double> volumes, const BondGraph& g,
                             const Material& m, std::span<const double> theta, std::span<Vec2> force) {
  std::vector<double> len;
  bond_lengths(cur, g, len);
  assemble_internal_force(cur, len, volumes, g, m, theta, force);
}

std::size_t update_bonds(std::span<const Vec2> cur, BondGraph& g, double s0) {
  std::vector<double> len;
  bond_lengths(cur, g, len);
  return update_bonds(len, g, s0);
}

void bond_lengths(std::span<const Vec2> cur, const BondGraph& g, std::vector<double>& len) {
  const auto n = static_cast<std::int64_t>(g.node_count());
  len.resize(g.bond_slots());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) len[b] = (cur[g.neighbors[b]] - cur[i]).norm();
  }
}

void compute_dilations(std::span<const double> len, std::span<const double> volumes, const BondGraph& g,
                       std::vector<double>& theta) {
  const auto n = static_cast<std::int64_t>(g.node_count());
  theta.resize(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double sum = 0.0;
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      if (!g.intact[b]) continue;
      const double r = g.ref_length[b];
      sum += r * (len[b] - r) * g.weight[b] * volumes[g.neighbors[b]];
    }
    theta[i] = 3.0 * sum / g.weighted_volume[i];
  }
}

void assemble_internal_force(std::span<const Vec2> cur, std::span<const double> len, std::span<const double> volumes,
                             const BondGraph& g, const Material& m, std::span<const double> theta,
                             std::span<Vec2> force) {
  const auto n = static_cast<std::int64_t>(g.node_count());
  const double dil_coef = 3.0 * m.kappa - 15.0 * m.shear / 3.0;
  const double dev_coef = 15.0 * m.shear;
  // Per-node factors of the two state terms: T_x(y) = J (r a_x + ext b_x) e.
  std::vector<double> a(static_cast<std::size_t>(n));
  std::vector<double> bcoef(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double inv_m = 1.0 / g.weighted_volume[i];
    a[i] = dil_coef * theta[i] * inv_m;
    bcoef[i] = dev_coef * inv_m;
  }
  bool singular = false;
#pragma omp parallel for schedule(static) reduction(|| : singular)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Vec2 acc;
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      if (!g.intact[b]) continue;
      const std::uint32_t j = g.neighbors[b];
      const double l = len[b];
      if (l == 0.0) {
        singular = true;
        continue;
      }
      const Vec2 dz = cur[j] - cur[i];
      const double r = g.ref_length[b];
      // T_{x_i}(x_j) - T_{x_j}(x_i): both states act along the same bond line.
      const double t = r * (a[i] + a[j]) + (l - r) * (bcoef[i] + bcoef[j]);
      acc += (g.weight[b] * t * volumes[j] / l) * dz;
    }
    force[i] += acc;
  }
  if (singular) throw SingularBondError("bonded nodes coincide");
}

std::size_t update_bonds(std::span<const double> len, BondGraph& g, double s0) {
  const auto n = static_cast<std::int64_t>(g.node_count());
  std::size_t newly = 0;
#pragma omp parallel for schedule(static) reduction(+ : newly)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      if (!g.intact[b]) continue;
      const double r = g.ref_length[b];
      if ((len[b] - r) / r > s0) {
        g.intact[b] = 0;
        if (i < g.neighbors[b]) ++newly;
      }
    }
  }
  return newly;
}

std::vector<double> damage_field(std::span<const Vec2> ref, std::span<const Vec2> disp, const BondGraph& g,
                                 double s0) {
  const std::size_t n = g.node_count();
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      const std::uint32_t j = g.neighbors[b];
      const double strain = (disp[j] - disp[i]).norm() / (ref[j] - ref[i]).norm();
      best = std::max(best, strain);
    }
    if (s0 > 0.0) {
      z[i] = best / s0;
    } else {
      z[i] = best > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
  }
  return z;
}

std::vector<std::size_t> fracture_zone(std::span<const double> damage) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < damage.size(); ++i) {
    if (damage[i] >= 1.0) out.push_back(i);
  }
  return out;
}

double elastic_energy(std::span<const Vec2> cur, std::span<const double> volumes, const BondGraph& g,
                      const Material& m, std::span<const double> theta) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    double dev = 0.0;
    for (std::uint32_t b = g.offsets[i]; b < g.offsets[i + 1]; ++b) {
      if (!g.intact[b]) continue;
      const std::uint32_t j = g.neighbors[b];
      const double r = g.ref_length[b];
      const double ed = (cur[j] - cur[i]).norm() - r - r * theta[i] / 3.0;
      dev += g.weight[b] * ed * ed * volumes[j];
    }
    const double w = 0.5 * m.kappa * theta[i] * theta[i] + 7.5 * m.shear / g.weighted_volume[i] * dev;
    total += w * volumes[i];
  }
  return total;
}

}  // namespace grainpd
