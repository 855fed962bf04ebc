#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grainpd/engine.hpp"
#include "grainpd/geometry.hpp"
#include "grainpd/observers.hpp"

namespace grainpd {

/// Hooks for the generic time loop.
struct RunHooks {
  int series_every = 1;    ///< sample the recorder every n steps (and at the last step)
  int snapshot_every = 0;  ///< call on_snapshot every n steps, 0 disables
  std::function<void(Simulation&)> on_snapshot;
  /// Checked after every sample; returning true ends the run early.
  std::function<bool(Simulation&)> stop;
  /// Receives the last checkpoint taken at a snapshot when the run fails with
  /// an InstabilityError (which is then rethrown).
  std::function<void(const Checkpoint&)> on_failure;
};

/// Steps `sim` up to (and including) step `until`, sampling `rec` at the
/// current step first. Returns true if the stop hook ended the run.
bool run(Simulation& sim, Recorder& rec, std::int64_t until, const RunHooks& hooks);

struct TwoParticleOptions {
  std::size_t top = 1;
  std::size_t bottom = 0;
  /// End the run once the top particle has left contact and started falling again.
  bool stop_after_rebound = true;
  int sample_every = 10;
};

struct TwoParticleOutcome {
  TimeSeries series;
  std::optional<CorResult> cor;  ///< nullopt when the particles never touched
  std::vector<std::size_t> fracture_zone;  ///< per body, at the end of the run
  std::size_t max_fz_top = 0;
  std::size_t max_fz_bottom = 0;
};

/// Two-particle drop/impact: records gap, contact flag, centroids and damage.
TwoParticleOutcome run_two_particle(Simulation& sim, const TwoParticleOptions& opts, RunHooks hooks = {});

/// Uniform grid packing of disks and hexagons inside the box [lo, hi].
struct PackingSpec {
  Vec2 lo;
  Vec2 hi;
  int nx = 5;
  int ny = 5;
  double radius = 1e-3;          ///< mean radius R0
  double spread = 0.1;           ///< R = R0 (1 + U(-spread, spread))
  double hexagon_fraction = 0.5;
  double min_gap = 0.0;          ///< minimum surface gap between particles and to the walls
  std::uint64_t seed = 0;
};

/// Throws ConfigError when the grid does not fit in the box.
[[nodiscard]] std::vector<ShapeSpec> generate_packing(const PackingSpec& spec);

/// Box of four walls around a packing. The top wall's lower edge starts at hi.y.
struct BoxSceneSpec {
  PackingSpec packing;
  std::uint32_t particle_material = 0;
  std::uint32_t wall_material = 0;
  double wall_thickness = 0.0;
  double particle_mesh = 0.0;  ///< target mesh size for particles
  double wall_mesh = 0.0;      ///< target mesh size for walls
};

/// Bodies named p0..p{n-1}, then walls "bottom", "left", "right", "top".
[[nodiscard]] std::vector<Body> build_box_bodies(const BoxSceneSpec& spec);

struct CompressionOptions {
  std::size_t top_wall = 0;
  double settle_time = 0.0;
  double wall_start = 0.0;  ///< y of the top wall's lower edge when compression starts
  /// If set, wall_start is replaced by this gap above the highest settled particle node.
  std::optional<double> wall_gap;
  double wall_speed = 0.0;  ///< downward speed of the top wall
  double compress_time = 0.0;
  int sample_every = 100;
  /// Called with the settled state before the wall is repositioned.
  std::function<void(const Checkpoint&)> on_settled;
};

struct CompressionOutcome {
  TimeSeries settle;
  TimeSeries compress;  ///< includes py_<top wall> and broken_bonds
};

/// Two-phase compression: settle under gravity, then move the top wall down.
CompressionOutcome run_compression(Simulation& sim, const CompressionOptions& opts, RunHooks hooks = {});

}  // namespace grainpd
