#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grainpd/peridynamics.hpp"
#include "grainpd/vec2.hpp"

namespace grainpd {

enum class DampingModel { center, node, off };

[[nodiscard]] std::string to_string(DampingModel model);
/// Throws ConfigError for unknown names.
[[nodiscard]] DampingModel damping_model_from_string(const std::string& name);

/// Inter-body contact settings. `radius` overrides the default 0.95 h.
struct ContactConfig {
  std::optional<double> radius;
  double friction_mu = 0.0;
  bool friction_enabled = false;
  DampingModel damping_model = DampingModel::center;
  double eps_bar_n = 1.0;  ///< particle-centre damping parameter, (0, 1]
  double c_bar = 100.0;
  double eps_n = 1.0;      ///< node-pair damping parameter, (0, 1]
  double c = 100.0;
  int rebuild_every = 1;

  friend bool operator==(const ContactConfig&, const ContactConfig&) = default;
};

/// Throws ConfigError naming the offending `contact.*` key.
void validate(const ContactConfig& cfg);

/// Default contact radius as a fraction of the scene mesh size.
inline constexpr double kContactRadiusFactor = 0.95;

[[nodiscard]] double effective_bulk_modulus(double kappa1, double kappa2);
/// K_n = 18 kappa / (pi eps^5).
[[nodiscard]] double spring_modulus(double kappa, double horizon);
[[nodiscard]] double harmonic_mass(double m1, double m2);
/// Dashpot viscosity -2 C log(eps) sqrt(kappa_eff R_c M / (pi^2 + log(eps)^2)); used
/// for both the node-pair (beta_n) and the centre (beta_bar_n) dashpots.
[[nodiscard]] double dashpot_viscosity(double c, double eps, double kappa_eff, double contact_radius,
                                       double mass_eq);

struct ContactParams {
  double radius = 0.0;     ///< R_c
  double stiffness = 0.0;  ///< K_n
  double kappa_eff = 0.0;
};

/// R_c = 0.95 h, kappa_eff = harmonic mean of the bulk moduli, K_n from kappa_eff.
/// With different horizons the mean horizon enters K_n.
[[nodiscard]] ContactParams derive_contact_params(const Material& a, const Material& b, double mesh_h);

/// A cross-body node pair within the contact radius. `a` < `b` are global node
/// indices; `e_n` points from a to b.
struct ContactPair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t body_a = 0;
  std::uint32_t body_b = 0;
  double distance = 0.0;
  Vec2 e_n;

  friend bool operator==(const ContactPair&, const ContactPair&) = default;
};

using ContactPairList = std::vector<ContactPair>;

/// Every pair of nodes of different bodies with |z - z'| < radius, sorted by
/// (a, b). Pairs joining two bodies flagged in `skip_body` (both fixed) are left out.
[[nodiscard]] ContactPairList find_contact_pairs(std::span<const Vec2> cur, std::span<const std::uint32_t> body_of,
                                                 double radius,
                                                 std::span<const std::uint8_t> skip_body = {});

/// Normal spring force density on z due to z': K_n delta V' e_n when
/// delta = |z - z'| - R_c < 0, else zero. Throws SingularContactError if z == z'.
[[nodiscard]] Vec2 normal_force(const Vec2& z, const Vec2& z_other, double stiffness, double vol_other,
                                double radius);

/// Coulomb friction density on a node with velocity `v` touching a node with
/// velocity `v_other`, given the normal force density `fn` on the node.
/// The tangential direction is the projection of (v - v_other)/|v - v_other|
/// off e_n (not renormalised) and the force is -mu |fn| times that, so it
/// always opposes sliding. Zero when the velocities are equal.
[[nodiscard]] Vec2 friction_force(const Vec2& e_n, const Vec2& fn, const Vec2& v, const Vec2& v_other, double mu);

/// Node-pair dashpot density on z: (1/V) beta_n delta_dot e_n when approaching
/// (delta_dot < 0) inside the spring range (delta < 0).
[[nodiscard]] Vec2 damping_node(const Vec2& z, const Vec2& z_other, const Vec2& v, const Vec2& v_other,
                                double radius, double beta_n, double vol);

/// Centre dashpot density applied to every node of a body of volume `body_volume`:
/// (1/|Omega|) beta_bar delta_dot_c e_c when the bodies are closer than R_c and
/// the centres approach. Throws SingularContactError for coincident centres.
[[nodiscard]] Vec2 damping_center(const Vec2& zc, const Vec2& zc_other, const Vec2& vc, const Vec2& vc_other,
                                  double body_distance, double radius, double beta_bar, double body_volume);

/// Normal-force repulsion between nodes of one body whose bond is broken and
/// which are closer than `radius`. Adds to `force`.
void self_contact_forces(const BondGraph& graph, std::span<const Vec2> cur, std::span<const double> volumes,
                         double stiffness, double radius, std::span<Vec2> force);

/// Body record as seen by the contact model.
struct ContactBody {
  std::uint32_t begin = 0;  ///< first global node
  std::uint32_t end = 0;    ///< one past the last global node
  std::uint32_t material = 0;
  bool fixed = false;
  bool wall = false;
  double volume = 0.0;      ///< |Omega|
};

/// Read-only view of the scene state used for contact evaluation.
struct ContactSystem {
  std::span<const Vec2> cur;
  std::span<const Vec2> vel;
  std::span<const double> volume;
  std::span<const std::uint32_t> body_of;
  std::span<const ContactBody> bodies;
  std::span<const Material> materials;
};

/// Owns the contact pair list and evaluates all inter-body contact forces.
class ContactModel {
 public:
  ContactModel(ContactConfig config, double contact_radius);

  [[nodiscard]] const ContactConfig& config() const { return config_; }
  [[nodiscard]] double radius() const { return radius_; }

  /// Refreshes the pair list for this step. With rebuild_every = n > 1 a
  /// candidate list gathered with a 1.5 R_c search radius is reused for n steps
  /// and filtered down to R_c every step.
  const ContactPairList& update_pairs(const ContactSystem& sys, std::int64_t step);

  [[nodiscard]] const ContactPairList& pairs() const { return pairs_; }

  /// Adds normal, friction and damping force densities for the current pair
  /// list to `force`, including the reaction densities on fixed nodes.
  void accumulate(const ContactSystem& sys, std::span<Vec2> force) const;

  /// sum over active pairs of K_n delta^2 V V' / 2.
  [[nodiscard]] double spring_energy(const ContactSystem& sys) const;

  /// Minimum node distance between two bodies found in the current pair list,
  /// or nullopt if they are not in contact.
  [[nodiscard]] std::optional<double> body_distance(std::uint32_t body_a, std::uint32_t body_b) const;

  /// Candidate list state for checkpointing.
  [[nodiscard]] const ContactPairList& candidates() const { return candidates_; }
  [[nodiscard]] std::int64_t last_build_step() const { return last_build_; }
  void restore(ContactPairList candidates, std::int64_t last_build_step);

 private:
  [[nodiscard]] ContactParams params_for(const ContactSystem& sys, std::uint32_t body_a, std::uint32_t body_b) const;
  void accumulate_center_damping(const ContactSystem& sys, std::span<Vec2> force) const;

  ContactConfig config_;
  double radius_;
  ContactPairList candidates_;
  std::int64_t last_build_ = -1;
  ContactPairList pairs_;
};

/// Volume-weighted mean of `values` over [begin, end).
[[nodiscard]] Vec2 weighted_mean(std::span<const Vec2> values, std::span<const double> volume, std::uint32_t begin,
                                 std::uint32_t end);

}  // namespace grainpd
