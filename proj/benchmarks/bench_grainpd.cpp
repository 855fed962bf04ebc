#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "grainpd/contact.hpp"
#include "grainpd/engine.hpp"
#include "grainpd/experiments.hpp"
#include "grainpd/peridynamics.hpp"
#include "grainpd/spatial.hpp"

using namespace grainpd;

namespace {

const Material kM1{1200.0, 2.16e7, 1.296e7, 50.0, 6.0e-4};

Body disk(double h) {
  ShapeSpec s;
  s.kind = ShapeKind::disk;
  s.radius = 1e-3;
  return make_body("disk", s, h, 0, false, {});
}

// A packing of n x n particles in a walled box, as in the compression runs.
Scene box_scene(int n) {
  Scene scene;
  scene.materials = {kM1};
  BoxSceneSpec box;
  const double side = n * 2.6e-3;
  box.packing = {{0, 0}, {side, side + 0.5e-3}, n, n, 1e-3, 0.1, 0.5, 1.4e-4, 3};
  box.wall_thickness = 6e-4;
  box.particle_mesh = 1.5e-4;
  box.wall_mesh = 1.5e-4;
  scene.bodies = build_box_bodies(box);
  scene.gravity = {0, -10};
  scene.integrator = {1e-7, 1.0};
  return scene;
}

void BM_BondGraph(benchmark::State& state) {
  const Body b = disk(1e-3 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto g = build_bond_graph(b.cloud.nodes, b.cloud.volumes, kM1.horizon);
    benchmark::DoNotOptimize(g);
  }
  state.counters["nodes"] = static_cast<double>(b.cloud.nodes.size());
}
BENCHMARK(BM_BondGraph)->Arg(7)->Arg(14)->Arg(28);

void BM_InternalForce(benchmark::State& state) {
  const Body b = disk(1e-3 / static_cast<double>(state.range(0)));
  const auto graph = build_bond_graph(b.cloud.nodes, b.cloud.volumes, kM1.horizon);
  std::vector<Vec2> cur = b.cloud.nodes;
  for (auto& p : cur) p = p * 1.001;
  std::vector<double> len, theta;
  std::vector<Vec2> force(cur.size());
  for (auto _ : state) {
    bond_lengths(cur, graph, len);
    compute_dilations(len, b.cloud.volumes, graph, theta);
    assemble_internal_force(cur, len, b.cloud.volumes, graph, kM1, theta, force);
    benchmark::DoNotOptimize(force.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cur.size()));
}
BENCHMARK(BM_InternalForce)->Arg(7)->Arg(14)->Arg(28);

void BM_PairSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const double r = 1.5 / std::sqrt(static_cast<double>(n));
  for (auto _ : state) {
    CellGrid grid(pts, r);
    auto pairs = grid.pairs_within(r);
    benchmark::DoNotOptimize(pairs);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PairSearch)->RangeMultiplier(10)->Range(1000, 100000);

void BM_Step(benchmark::State& state) {
  Simulation sim(box_scene(static_cast<int>(state.range(0))));
  sim.advance();
  for (auto _ : state) sim.advance();
  state.counters["nodes"] = static_cast<double>(sim.node_count());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.node_count()));
}
BENCHMARK(BM_Step)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
