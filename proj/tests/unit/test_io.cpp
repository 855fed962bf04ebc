#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grainpd/error.hpp"
#include "grainpd/io.hpp"
#include "oracles.hpp"

using namespace grainpd;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(
materials:
  m1: {rho: 1200, kappa: 2.16e7, shear: 1.296e7, gc: 50, horizon: 6.0e-4}
scene:
  mesh_size: 1.5e-4
  bodies:
    - name: a
      shape: {kind: disk, center: [0, 0], radius: 1.0e-3}
      material: m1
integrator: {dt: 2.0e-7, t_final: 1.0e-4}
)";

std::string with(const std::string& extra) { return kMinimal + extra; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "grainpd_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string config_error_key(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const auto doc = parse_config(kMinimal);
  EXPECT_EQ(doc.contact.c_bar, 100.0);
  EXPECT_EQ(doc.contact.c, 100.0);
  EXPECT_EQ(doc.contact.eps_bar_n, 1.0);
  EXPECT_EQ(doc.contact.damping_model, DampingModel::center);
  EXPECT_FALSE(doc.contact.radius.has_value());
  EXPECT_EQ(doc.integrator.dt, 2.0e-7);
  EXPECT_EQ(doc.bodies.size(), 1u);
  EXPECT_EQ(doc.materials.at("m1").kappa, 2.16e7);
  EXPECT_EQ(doc.experiment.kind, ExperimentKind::none);
}

TEST(Config, MissingKeysNamed) {
  const std::string no_dt = R"(
materials:
  m1: {rho: 1200, kappa: 2.16e7, shear: 1.296e7, gc: 50, horizon: 6.0e-4}
scene:
  mesh_size: 1.5e-4
  bodies:
    - {name: a, shape: {kind: disk, center: [0, 0], radius: 1.0e-3}, material: m1}
integrator: {t_final: 1.0e-4}
)";
  EXPECT_EQ(config_error_key(no_dt), "integrator.dt");
  std::string no_gc = kMinimal;
  no_gc.replace(no_gc.find("gc: 50, "), 8, "");
  EXPECT_EQ(config_error_key(no_gc), "materials.m1.gc");
}

TEST(Config, RoundTrip) {
  const auto full = parse_config(R"(
seed: 17
materials:
  m1: {rho: 1200, kappa: 2.16e7, shear: 1.296e7, gc: 50, horizon: 6.0e-4}
  m2: {rho: 1200, kappa: 2.0e9, shear: 1.2e9, gc: 500, horizon: 6.0e-4}
scene:
  gravity: [0.1, -9.81]
  mesh_size: 1.429e-4
  bodies:
    - {name: bottom, shape: {kind: concave, center: [0, 0], radius: 1.0e-3, neck: 0.4e-3, axis: [0, 1]}, material: m1, fixed: true}
    - {name: top, shape: {kind: hexagon, center: [0.1e-3, 3.0e-3], radius: 1.0e-3, axis: [0.6, 0.8]}, material: m2, velocity: [0, -2], mesh_size: 1.2e-4}
contact: {damping_model: node, eps_n: 0.85, c: 50, friction_enabled: true, friction_mu: 0.3, radius: 1.1e-4, rebuild_every: 3}
integrator: {dt: 1.0e-7, t_final: 1.0e-3}
output: {dir: out/x, every_n: 100, series_every_n: 7}
experiment: {kind: two_particle, top: top, bottom: bottom, stop_after_rebound: false}
)");
  const auto again = parse_config(serialize_config(full));
  EXPECT_EQ(again, full);
  EXPECT_EQ(serialize_config(again), serialize_config(full));
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_EQ(config_error_key(with("contact: {dampnig_model: node}\n")), "contact.dampnig_model");
  EXPECT_EQ(config_error_key(with("colour: red\n")), "colour");
}

TEST(Config, OutOfRangeValuesRejected) {
  EXPECT_EQ(config_error_key(with("contact: {eps_bar_n: 1.5}\n")), "contact.eps_bar_n");
  EXPECT_EQ(config_error_key(with("contact: {eps_bar_n: 0}\n")), "contact.eps_bar_n");
  EXPECT_EQ(config_error_key(with("contact: {damping_model: sticky}\n")), "contact.damping_model");
  std::string neck = kMinimal;
  neck.replace(neck.find("kind: disk"), 10, "kind: concave, neck: 1.2e-3");
  EXPECT_EQ(config_error_key(neck), "scene.bodies[0].shape");
  std::string mat = kMinimal;
  mat.replace(mat.find("material: m1"), 12, "material: m9");
  EXPECT_EQ(config_error_key(mat), "scene.bodies[0].material");
}

TEST(Config, BuildsScene) {
  const auto doc = parse_config(kMinimal);
  const auto scene = build_scene(doc);
  ASSERT_EQ(scene.bodies.size(), 1u);
  EXPECT_EQ(scene.bodies[0].name, "a");
  EXPECT_GT(scene.bodies[0].cloud.nodes.size(), 100u);
  EXPECT_EQ(scene.integrator.dt, 2.0e-7);
}

TEST(Snapshot, ThreeNodesRoundTrip) {
  Scene scene;
  scene.materials = {Material{1200.0, 2.16e7, 1.296e7, 50.0, 6.0e-4}};
  scene.integrator = {1e-7, 1e-5};
  TriMesh tri;
  tri.nodes = {{0, 0}, {1e-4, 0}, {0.3e-4, 1.1e-4}};
  tri.triangles = {{0, 1, 2}};
  Body body;
  body.name = "tri";
  body.cloud = to_meshless(tri);
  scene.bodies.push_back(body);
  Simulation sim(scene);
  sim.set_external_force([](double, std::span<const Vec2>, std::span<const Vec2>, std::span<Vec2> f) {
    f[0] += Vec2{-3e7, 1e7};
  });
  for (int n = 0; n < 30; ++n) sim.advance();

  const auto path = scratch("three.csv");
  write_snapshot(path, sim);
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, kSnapshotHeader);
  }
  const auto rows = read_snapshot(path);
  ASSERT_EQ(rows.size(), 3u);
  const auto z = sim.damage();
  std::vector<Vec2> u(sim.displacement().begin(), sim.displacement().end());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].id, i);
    EXPECT_EQ(rows[i].x, sim.reference()[i]);
    EXPECT_EQ(rows[i].u, sim.displacement()[i]);
    EXPECT_EQ(rows[i].v, sim.velocity()[i]);
    EXPECT_EQ(rows[i].volume, sim.volume()[i]);
    EXPECT_EQ(rows[i].z, z[i]);
    EXPECT_FALSE(rows[i].fixed);
    EXPECT_NEAR(rows[i].z, oracle::damage(i, sim.reference(), u, 6.0e-4, sim.critical_stretch(0)), 1e-12 * (1 + z[i]));
  }
  EXPECT_GT(z[0], 0.0);
}

TEST(TimeSeriesIo, EmptyWritesHeaderOnly) {
  std::ostringstream out;
  write_timeseries(out, TimeSeries({"t", "gap"}));
  EXPECT_EQ(out.str(), "t,gap\n");
  std::istringstream in(out.str());
  const auto back = read_timeseries(in);
  EXPECT_TRUE(back.empty());
  EXPECT_EQ(back.columns(), (std::vector<std::string>{"t", "gap"}));
}

TEST(TimeSeriesIo, RoundTripIsExact) {
  TimeSeries ts({"t", "a", "b"});
  ts.append({0.0, 1.0 / 3.0, -2e-300});
  ts.append({1e-7, 6.02214076e23, 0.1 + 0.2});
  std::stringstream ss;
  write_timeseries(ss, ts);
  EXPECT_EQ(read_timeseries(ss), ts);
  std::istringstream ragged("t,a\n0,1\n1\n");
  EXPECT_THROW((void)read_timeseries(ragged), IoError);
  std::istringstream backwards("t,a\n1,1\n0,2\n");
  EXPECT_THROW((void)read_timeseries(backwards), IoError);
}

TEST(CheckpointIo, RoundTripAndCorruption) {
  Checkpoint cp;
  cp.step = 1234;
  cp.bootstrapped = true;
  cp.u = {{1e-3, -2e-4}, {1.0 / 3.0, 0.0}};
  cp.v = {{0.5, 0.25}, {-1.0, 7.0}};
  cp.bonds = {{1, 0, 1}, {}};
  cp.motions = {MotionLaw{}, MotionLaw{{0, 1e-3}, {0, -0.1}, 0.5}};
  cp.rng_state = "1 2 3";
  cp.contact_candidates = {ContactPair{0, 1, 0, 1, 1e-4, {1, 0}}};
  cp.contact_last_build = 1230;
  const auto path = scratch("cp.bin");
  write_checkpoint(path, cp);
  EXPECT_EQ(read_checkpoint(path), cp);

  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 3);
  EXPECT_THROW((void)read_checkpoint(path), IoError);
  {
    std::ofstream junk(path, std::ios::binary);
    junk << "not a checkpoint";
  }
  EXPECT_THROW((void)read_checkpoint(path), IoError);
  EXPECT_THROW((void)read_checkpoint(scratch("missing.bin")), IoError);
}

TEST(Config, LoadMissingFileIsIoError) { EXPECT_THROW((void)load_config(scratch("nope.yaml")), IoError); }

TEST(Config, CompressWallGap) {
  const std::string text = R"(
materials:
  m1: {rho: 1200, kappa: 2.16e7, shear: 1.296e7, gc: 50, horizon: 6.0e-4}
scene: {mesh_size: 2.5e-4}
integrator: {dt: 2.0e-7, t_final: 2.0e-3}
experiment:
  kind: compress
  packing: {lo: [0, 0], hi: [6.0e-3, 6.0e-3], nx: 2, ny: 2, radius: 1.0e-3, min_gap: 2.5e-4}
  particle_material: m1
  wall_material: m1
  settle_time: 1.0e-3
  wall_gap: 2.0e-4
  wall_speed: 0.1
)";
  const auto doc = parse_config(text);
  ASSERT_TRUE(doc.experiment.compress.wall_gap.has_value());
  EXPECT_EQ(*doc.experiment.compress.wall_gap, 2.0e-4);
  EXPECT_EQ(parse_config(serialize_config(doc)), doc);
  const auto scene = build_scene(doc);
  EXPECT_EQ(compression_options(doc, scene).wall_gap, doc.experiment.compress.wall_gap);
  std::string bad = text;
  bad.replace(bad.find("wall_gap: 2.0e-4"), 16, "wall_gap: -1.0e-4");
  EXPECT_EQ(config_error_key(bad), "experiment.wall_gap");
}
