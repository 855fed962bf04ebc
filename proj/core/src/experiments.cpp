#include "grainpd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

#include "grainpd/error.hpp"

namespace grainpd {

bool run(Simulation& sim, Recorder& rec, std::int64_t until, const RunHooks& hooks) {
  const int series_every = std::max(1, hooks.series_every);
  std::optional<Checkpoint> last_good;
  if (hooks.on_failure) last_good = sim.checkpoint();

  auto visit = [&](bool last) {
    const std::int64_t n = sim.step();
    if (hooks.snapshot_every > 0 && n % hooks.snapshot_every == 0) {
      if (hooks.on_snapshot) hooks.on_snapshot(sim);
      if (hooks.on_failure) last_good = sim.checkpoint();
    }
    if (last || n % series_every == 0) {
      rec.sample(sim);
      if (hooks.stop && hooks.stop(sim)) return true;
    }
    return false;
  };

  if (visit(sim.step() >= until)) return true;
  while (sim.step() < until) {
    try {
      sim.advance();
    } catch (const InstabilityError&) {
      if (hooks.on_failure && last_good) hooks.on_failure(*last_good);
      throw;
    }
    if (visit(sim.step() == until)) return true;
  }
  return false;
}

TwoParticleOutcome run_two_particle(Simulation& sim, const TwoParticleOptions& opts, RunHooks hooks) {
  if (opts.top >= sim.body_count() || opts.bottom >= sim.body_count() || opts.top == opts.bottom) {
    throw ConfigError("experiment", "two-particle test needs two distinct bodies");
  }
  Recorder rec;
  rec.add(std::make_unique<GapObserver>(opts.top, opts.bottom));
  rec.add(std::make_unique<CentroidObserver>(sim, std::vector<std::size_t>{opts.bottom, opts.top}));
  rec.add(std::make_unique<DamageObserver>(sim));

  hooks.series_every = opts.sample_every;
  bool touched = false;
  bool receding = false;
  auto user_stop = hooks.stop;
  hooks.stop = [&, user_stop](Simulation& s) {
    if (user_stop && user_stop(s)) return true;
    if (!opts.stop_after_rebound) return false;
    const auto& row = rec.series().rows().back();
    const bool in_contact = row[2] != 0.0;
    if (in_contact) {
      touched = true;
      receding = false;
      return false;
    }
    if (!touched) return false;
    // Out of contact again: stop once the centres, having moved apart, start closing in.
    // A contact flag that flickers off mid-impact must not end the run.
    const Vec2 d = s.centroid(opts.top) - s.centroid(opts.bottom);
    const Vec2 dv = s.centroid_velocity(opts.top) - s.centroid_velocity(opts.bottom);
    if (dot(dv, d) > 0.0) receding = true;
    return receding && dot(dv, d) < 0.0;
  };
  run(sim, rec, sim.total_steps(), hooks);

  TwoParticleOutcome out;
  out.series = rec.series();
  try {
    out.cor = cor_from_records(out.series);
  } catch (const IoError&) {
    throw;
  } catch (const Error&) {
    out.cor = std::nullopt;
  }
  out.fracture_zone = sim.fracture_zone_sizes();
  auto column_max = [&](std::size_t b) {
    const std::string col = "fz_" + sim.scene().bodies[b].name;
    if (!out.series.has_column(col)) return std::size_t{0};
    double best = 0.0;
    for (double v : out.series.column(col)) best = std::max(best, v);
    return static_cast<std::size_t>(best);
  };
  out.max_fz_top = column_max(opts.top);
  out.max_fz_bottom = column_max(opts.bottom);
  return out;
}

std::vector<ShapeSpec> generate_packing(const PackingSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw ConfigError("experiment.packing", "grid must have at least one cell");
  if (!(spec.radius > 0.0)) throw ConfigError("experiment.packing.radius", "must be positive");
  if (!(spec.spread >= 0.0 && spec.spread < 1.0)) throw ConfigError("experiment.packing.spread", "must be in [0, 1)");
  if (!(spec.hexagon_fraction >= 0.0 && spec.hexagon_fraction <= 1.0)) {
    throw ConfigError("experiment.packing.hexagon_fraction", "must be in [0, 1]");
  }
  const double width = spec.hi.x - spec.lo.x;
  const double dx = width / spec.nx;
  const double dy = dx;
  const double r_max = spec.radius * (1.0 + spec.spread);
  // Horizontal play that keeps neighbours and walls at least min_gap apart.
  const double play = 0.5 * (dx - 2.0 * r_max - 2.0 * spec.min_gap);
  if (play < 0.0 || dy * spec.ny > spec.hi.y - spec.lo.y) {
    throw ConfigError("experiment.packing", "particle grid does not fit in the box");
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ShapeSpec> out;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      ShapeSpec s;
      const double r_draw = unit(rng);
      const double kind_draw = unit(rng);
      const double shift_draw = unit(rng);
      const double angle_draw = unit(rng);
      s.radius = spec.radius * (1.0 + spec.spread * (2.0 * r_draw - 1.0));
      s.kind = kind_draw < spec.hexagon_fraction ? ShapeKind::hexagon : ShapeKind::disk;
      s.center = {spec.lo.x + (i + 0.5) * dx + play * (2.0 * shift_draw - 1.0), spec.lo.y + (j + 0.5) * dy};
      s.rotation = 2.0 * std::numbers::pi * angle_draw;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Body> build_box_bodies(const BoxSceneSpec& spec) {
  if (!(spec.wall_thickness > 0.0)) throw ConfigError("experiment.wall_thickness", "must be positive");
  const auto shapes = generate_packing(spec.packing);
  std::vector<Body> bodies;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    bodies.push_back(
        make_body("p" + std::to_string(k), shapes[k], spec.particle_mesh, spec.particle_material, false, {}));
  }
  const Vec2 lo = spec.packing.lo;
  const Vec2 hi = spec.packing.hi;
  const double t = spec.wall_thickness;
  auto wall = [&](const char* name, Vec2 a, Vec2 b) {
    ShapeSpec s;
    s.kind = ShapeKind::rectangle;
    s.corner_lo = a;
    s.corner_hi = b;
    bodies.push_back(make_body(name, s, spec.wall_mesh, spec.wall_material, true, {}));
  };
  wall("bottom", {lo.x - t, lo.y - t}, {hi.x + t, lo.y});
  wall("left", {lo.x - t, lo.y}, {lo.x, hi.y + t});
  wall("right", {hi.x, lo.y}, {hi.x + t, hi.y + t});
  wall("top", {lo.x, hi.y}, {hi.x, hi.y + t});
  return bodies;
}

CompressionOutcome run_compression(Simulation& sim, const CompressionOptions& opts, RunHooks hooks) {
  if (opts.top_wall >= sim.body_count() || !sim.scene().bodies[opts.top_wall].fixed) {
    throw ConfigError("experiment.top_wall", "must name a fixed body");
  }
  if (!(opts.wall_speed >= 0.0)) throw ConfigError("experiment.wall_speed", "must be non-negative");
  if (!(opts.settle_time >= 0.0) || !(opts.compress_time > 0.0)) {
    throw ConfigError("experiment", "settle_time must be non-negative and compress_time positive");
  }
  const std::size_t w = opts.top_wall;
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  for (std::uint32_t i = sim.body_begin(w); i < sim.body_end(w); ++i) {
    x_lo = std::min(x_lo, sim.reference()[i].x);
    x_hi = std::max(x_hi, sim.reference()[i].x);
    y_lo = std::min(y_lo, sim.reference()[i].y);
  }
  hooks.series_every = opts.sample_every;

  CompressionOutcome out;
  {
    Recorder rec;
    rec.add(std::make_unique<DamageObserver>(sim));
    const auto settle_steps = std::llround(opts.settle_time / sim.dt());
    run(sim, rec, sim.step() + settle_steps, hooks);
    out.settle = rec.series();
  }
  if (opts.on_settled) opts.on_settled(sim.checkpoint());

  double start = opts.wall_start;
  if (opts.wall_gap) {
    double pile_top = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < sim.body_count(); ++b) {
      if (sim.scene().bodies[b].fixed) continue;
      for (std::uint32_t i = sim.body_begin(b); i < sim.body_end(b); ++i) {
        pile_top = std::max(pile_top, sim.reference()[i].y + sim.displacement()[i].y);
      }
    }
    start = pile_top + *opts.wall_gap;
  }
  sim.set_motion(w, {0.0, start - y_lo}, {0.0, -opts.wall_speed});
  Recorder rec;
  rec.add(std::make_unique<ReactionObserver>(sim, w, x_hi - x_lo));
  rec.add(std::make_unique<CentroidObserver>(sim, std::vector<std::size_t>{w}));
  rec.add(std::make_unique<DamageObserver>(sim));
  run(sim, rec, sim.step() + std::llround(opts.compress_time / sim.dt()), hooks);
  out.compress = rec.series();
  return out;
}

}  // namespace grainpd
