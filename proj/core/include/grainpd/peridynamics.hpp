#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grainpd/vec2.hpp"

namespace grainpd {

/// Isotropic state-based peridynamic material. SI units throughout; 2D
/// quantities are per metre of thickness.
struct Material {
  double rho = 0.0;      ///< density, kg/m^3
  double kappa = 0.0;    ///< bulk modulus, Pa
  double shear = 0.0;    ///< shear modulus, Pa
  double gc = 0.0;       ///< critical energy release rate, J/m^2
  double horizon = 0.0;  ///< nonlocal length scale epsilon, m

  friend bool operator==(const Material&, const Material&) = default;
};

/// Throws MaterialError unless rho, kappa, shear and horizon are positive and gc >= 0.
void validate(const Material& m);

/// Critical bond stretch derived from the fracture energy:
///   s0 = sqrt(Gc / ((3G + (3/4)^4 (kappa - 5G/3)) * epsilon)).
/// Throws MaterialError when the denominator is not positive.
[[nodiscard]] double critical_stretch(const Material& m);

/// Influence function J(a) = 1 - a on [0, 1], zero beyond.
[[nodiscard]] constexpr double influence(double a) { return a <= 1.0 ? 1.0 - a : 0.0; }

/// Intra-body bonds in compressed-row form. Each bond is stored twice, once
/// from each end; both copies always carry the same intact flag.
struct BondGraph {
  double horizon = 0.0;
  std::vector<std::uint32_t> offsets;     ///< size n+1
  std::vector<std::uint32_t> neighbors;   ///< local node index of the far end
  std::vector<double> ref_length;         ///< r = |x_j - x_i|
  std::vector<double> weight;             ///< J(r / epsilon)
  std::vector<std::uint8_t> intact;       ///< 1 intact, 0 broken (never reverts)
  std::vector<double> weighted_volume;    ///< m_x per node

  [[nodiscard]] std::size_t node_count() const { return weighted_volume.size(); }
  [[nodiscard]] std::size_t bond_slots() const { return neighbors.size(); }
  /// Number of distinct (unordered) bonds.
  [[nodiscard]] std::size_t bond_count() const { return neighbors.size() / 2; }
  [[nodiscard]] std::size_t broken_count() const;
};

/// Collects, for each node, every other node strictly inside the horizon and
/// the weighted volume m_i = sum_j r^2 J(r/eps) V_j. Throws MaterialError if a
/// node ends up with no neighbour.
[[nodiscard]] BondGraph build_bond_graph(std::span<const Vec2> ref, std::span<const double> volumes,
                                         double horizon);

/// theta_i = (3/m_i) sum_j h_ij r_ij (|z_j - z_i| - r_ij) J V_j.
[[nodiscard]] double dilation(std::size_t i, std::span<const Vec2> cur, std::span<const double> volumes,
                              const BondGraph& graph);

/// T_{x_i}(x_j) for the bond stored at `slot` (which must belong to node i).
/// Throws SingularBondError when the two current positions coincide.
[[nodiscard]] Vec2 force_state(std::size_t i, std::size_t slot, double theta_i, std::span<const Vec2> cur,
                               const BondGraph& graph, const Material& m);

/// Dilation of every node into `theta` (resized).
void compute_dilations(std::span<const Vec2> cur, std::span<const double> volumes, const BondGraph& graph,
                       std::vector<double>& theta);

/// Internal force density F_i = sum_j (T_{x_i}(x_j) - T_{x_j}(x_i)) V_j.
/// `theta` must hold current dilations. Results are added to `force`.
void assemble_internal_force(std::span<const Vec2> cur, std::span<const double> volumes,
                             const BondGraph& graph, const Material& m, std::span<const double> theta,
                             std::span<Vec2> force);

/// Breaks every intact bond whose stretch (|z_j - z_i| - r)/r exceeds s0.
/// Returns the number of distinct bonds broken by this call.
std::size_t update_bonds(std::span<const Vec2> cur, BondGraph& graph, double s0);

/// Z_i = max_j |u_j - u_i| / (|x_j - x_i| s0) over the reference neighbourhood.
[[nodiscard]] std::vector<double> damage_field(std::span<const Vec2> ref, std::span<const Vec2> disp,
                                               const BondGraph& graph, double s0);

/// Indices with Z >= 1.
[[nodiscard]] std::vector<std::size_t> fracture_zone(std::span<const double> damage);

/// Current length |z_j - z_i| of every bond slot into `len` (resized). The
/// overloads below taking `len` give bitwise the same results as the ones
/// that measure positions themselves, with one square root per slot per step.
void bond_lengths(std::span<const Vec2> cur, const BondGraph& graph, std::vector<double>& len);
void compute_dilations(std::span<const double> len, std::span<const double> volumes, const BondGraph& graph,
                       std::vector<double>& theta);
void assemble_internal_force(std::span<const Vec2> cur, std::span<const double> len, std::span<const double> volumes,
                             const BondGraph& graph, const Material& m, std::span<const double> theta,
                             std::span<Vec2> force);
std::size_t update_bonds(std::span<const double> len, BondGraph& graph, double s0);

/// Stored elastic energy sum_i V_i [kappa theta_i^2 / 2 + 15G/(2 m_i) sum_j h J (e^d_ij)^2 V_j],
/// the potential whose discrete gradient is the assembled internal force.
[[nodiscard]] double elastic_energy(std::span<const Vec2> cur, std::span<const double> volumes,
                                    const BondGraph& graph, const Material& m,
                                    std::span<const double> theta);

}  // namespace grainpd
