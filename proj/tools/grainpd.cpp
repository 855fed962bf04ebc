#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "grainpd/engine.hpp"
#include "grainpd/error.hpp"
#include "grainpd/experiments.hpp"
#include "grainpd/geometry.hpp"
#include "grainpd/io.hpp"
#include "grainpd/numfmt.hpp"
#include "grainpd/observers.hpp"

namespace fs = std::filesystem;
using namespace grainpd;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, instability = 3, io_error = 4 };

struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_dry_run) {
  cmd->add_option("--config", c.config, "YAML config file")->required();
  cmd->add_option("--out", c.out, "output directory (default: output.dir from the config)");
  cmd->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "overrides the config seed");
  if (with_dry_run) cmd->add_flag("--dry-run", c.dry_run, "validate and print derived parameters only");
}

struct Loaded {
  ConfigDocument doc;
  fs::path base_dir;
  fs::path out_dir;
};

Loaded load(const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
  Loaded l;
  l.doc = load_config(c.config);
  if (c.seed) l.doc.seed = *c.seed;
  l.base_dir = fs::path(c.config).parent_path();
  l.out_dir = c.out.empty() ? fs::path(l.doc.output.dir) : fs::path(c.out);
  return l;
}

void print_derived(const Scene& scene, const DerivedParams& p) {
  std::printf("bodies         %zu\n", scene.bodies.size());
  std::printf("nodes          %zu\n", p.node_count);
  std::printf("bonds          %zu\n", p.bond_count);
  std::printf("mesh_size      %s m\n", shortest(p.mesh_size).c_str());
  std::printf("contact_radius %s m\n", shortest(p.contact_radius).c_str());
  for (std::size_t m = 0; m < scene.materials.size(); ++m) {
    std::printf("material[%zu]    s0 %s  K_n %s\n", m, shortest(p.critical_stretch[m]).c_str(),
                shortest(p.spring_modulus[m]).c_str());
  }
  for (const auto& v : p.center_viscosity) {
    std::printf("beta_bar       %s/%s %s kg/s\n", scene.bodies[v.a].name.c_str(), scene.bodies[v.b].name.c_str(),
                shortest(v.beta_bar).c_str());
  }
  std::printf("dt             %s s (advisory limit %s s)\n", shortest(scene.integrator.dt).c_str(),
              shortest(p.advisory_dt).c_str());
  std::printf("steps          %lld\n",
              static_cast<long long>(std::llround(scene.integrator.t_final / scene.integrator.dt)));
}

void warn_time_step(const Scene& scene, const DerivedParams& p) {
  if (scene.integrator.dt > p.advisory_dt) {
    std::fprintf(stderr, "warning: dt = %s s exceeds the advisory stability limit %s s\n",
                 shortest(scene.integrator.dt).c_str(), shortest(p.advisory_dt).c_str());
  }
}

RunHooks snapshot_hooks(const ConfigDocument& doc, const fs::path& out_dir) {
  RunHooks hooks;
  hooks.snapshot_every = doc.output.every_n;
  hooks.on_snapshot = [out_dir](Simulation& sim) {
    write_snapshot(out_dir / ("snapshot_" + std::to_string(sim.step()) + ".csv"), sim);
  };
  hooks.on_failure = [out_dir](const Checkpoint& cp) {
    write_checkpoint(out_dir / "last_good.bin", cp);
    std::fprintf(stderr, "last good state (step %lld) saved to %s\n", static_cast<long long>(cp.step),
                 (out_dir / "last_good.bin").string().c_str());
  };
  return hooks;
}

void write_cor(const fs::path& path, const std::optional<CorResult>& cor) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "h0,h1,cor\n";
  if (cor) out << shortest(cor->h0) << ',' << shortest(cor->h1) << ',' << shortest(cor->cor) << '\n';
}

void write_reaction(const fs::path& path, const TimeSeries& series, const std::string& wall, double window) {
  const auto t = series.column("t");
  const auto raw = series.column("py_" + wall);
  const auto smooth = reaction_force(series, wall, window);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "t,py_" << wall << ",reaction\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << shortest(t[k]) << ',' << shortest(raw[k]) << ',' << shortest(smooth[k]) << '\n';
  }
}

int simulate(const Loaded& l, bool dry_run) {
  const Scene scene = build_scene(l.doc, l.base_dir);
  const DerivedParams p = derive_params(scene);
  print_derived(scene, p);
  warn_time_step(scene, p);
  if (dry_run) return ok;

  fs::create_directories(l.out_dir);
  {
    std::ofstream cfg(l.out_dir / "config.yaml");
    cfg << serialize_config(l.doc);
  }
  Simulation sim(scene);
  RunHooks hooks = snapshot_hooks(l.doc, l.out_dir);

  switch (l.doc.experiment.kind) {
    case ExperimentKind::two_particle: {
      const auto out = run_two_particle(sim, two_particle_options(l.doc, scene), hooks);
      write_timeseries(l.out_dir / "series.csv", out.series);
      write_cor(l.out_dir / "cor.csv", out.cor);
      if (out.cor) {
        std::printf("H0 %s  H1 %s  C_R %s\n", shortest(out.cor->h0).c_str(), shortest(out.cor->h1).c_str(),
                    shortest(out.cor->cor).c_str());
      } else {
        std::fprintf(stderr, "warning: the particles never touched\n");
      }
      break;
    }
    case ExperimentKind::compress: {
      CompressionOptions opts = compression_options(l.doc, scene);
      const fs::path settled = l.out_dir / "settled.bin";
      opts.on_settled = [settled](const Checkpoint& cp) { write_checkpoint(settled, cp); };
      const auto out = run_compression(sim, opts, hooks);
      write_timeseries(l.out_dir / "settle_series.csv", out.settle);
      write_timeseries(l.out_dir / "series.csv", out.compress);
      write_reaction(l.out_dir / "reaction.csv", out.compress, scene.bodies[opts.top_wall].name,
                     l.doc.experiment.compress.window);
      break;
    }
    case ExperimentKind::none: {
      Recorder rec;
      std::vector<std::size_t> bodies;
      for (std::size_t b = 0; b < scene.bodies.size(); ++b) bodies.push_back(b);
      rec.add(std::make_unique<CentroidObserver>(sim, bodies));
      rec.add(std::make_unique<EnergyObserver>());
      rec.add(std::make_unique<DamageObserver>(sim));
      hooks.series_every = l.doc.output.series_every_n;
      run(sim, rec, sim.total_steps(), hooks);
      write_timeseries(l.out_dir / "series.csv", rec.series());
      break;
    }
  }
  write_checkpoint(l.out_dir / "checkpoint.bin", sim.checkpoint());
  write_snapshot(l.out_dir / "final.csv", sim);
  std::printf("finished at step %lld, broken bonds %zu\n", static_cast<long long>(sim.step()), sim.broken_bonds());
  return ok;
}

int cmd_calibrate(const Loaded& base, std::vector<double> eps) {
  if (base.doc.experiment.kind != ExperimentKind::two_particle) {
    throw ConfigError("experiment.kind", "calibrate-cor needs a two_particle config");
  }
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  fs::create_directories(base.out_dir);
  std::ofstream table(base.out_dir / "cor_table.csv");
  if (!table) throw IoError("cannot write '" + (base.out_dir / "cor_table.csv").string() + "'");
  table << "eps_bar_n,cor,h0,h1\n";
  std::printf("eps_bar_n,cor,h0,h1\n");
  for (double e : eps) {
    ConfigDocument doc = base.doc;
    doc.contact.eps_bar_n = e;
    validate(doc);
    const Scene scene = build_scene(doc, base.base_dir);
    Simulation sim(scene);
    const auto out = run_two_particle(sim, two_particle_options(doc, scene));
    write_timeseries(base.out_dir / ("series_eps_" + shortest(e) + ".csv"), out.series);
    if (!out.cor) throw Error("no contact for eps_bar_n = " + shortest(e));
    const std::string row = shortest(e) + "," + shortest(out.cor->cor) + "," + shortest(out.cor->h0) + "," +
                            shortest(out.cor->h1);
    table << row << '\n';
    table.flush();
    std::printf("%s\n", row.c_str());
    std::fflush(stdout);
  }
  return ok;
}

struct MeshArgs {
  std::string kind = "disk";
  std::vector<double> center{0.0, 0.0};
  double radius = 1e-3;
  std::vector<double> axis{1.0, 0.0};
  double neck = 0.0;
  std::vector<double> corner_lo{0.0, 0.0};
  std::vector<double> corner_hi{0.0, 0.0};
  double rotation = 0.0;
  double h = 0.0;
  std::string output;
};

int cmd_mesh(const MeshArgs& a) {
  ShapeSpec s;
  s.kind = shape_kind_from_string(a.kind);
  s.center = {a.center[0], a.center[1]};
  s.radius = a.radius;
  s.axis = {a.axis[0], a.axis[1]};
  s.neck = a.neck;
  s.corner_lo = {a.corner_lo[0], a.corner_lo[1]};
  s.corner_hi = {a.corner_hi[0], a.corner_hi[1]};
  s.rotation = a.rotation;
  const TriMesh mesh = triangulate(generate_shape(s, a.h), a.h);
  const MeshlessCloud cloud = to_meshless(mesh);
  std::ofstream out(a.output);
  if (!out) throw IoError("cannot write '" + a.output + "'");
  write_mesh(out, mesh);
  double area = 0.0;
  for (double v : cloud.volumes) area += v;
  std::printf("nodes %zu  triangles %zu  mesh_size %s m  area %s m^2\n", mesh.nodes.size(), mesh.triangles.size(),
              shortest(cloud.mesh_size).c_str(), shortest(area).c_str());
  return ok;
}

int cmd_postprocess(const std::string& records, const std::string& task, double window, const std::string& wall,
                    const std::string& out_path) {
  const TimeSeries series = read_timeseries(fs::path(records));
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw IoError("cannot write '" + out_path + "'");
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (task == "cor") {
    const CorResult r = cor_from_records(series);
    out << "h0,h1,cor\n" << shortest(r.h0) << ',' << shortest(r.h1) << ',' << shortest(r.cor) << '\n';
  } else if (task == "reaction") {
    const auto t = series.column("t");
    const auto smooth = reaction_force(series, wall, window);
    out << "t,reaction\n";
    for (std::size_t k = 0; k < t.size(); ++k) out << shortest(t[k]) << ',' << shortest(smooth[k]) << '\n';
  } else {
    std::vector<std::string> cols;
    for (const auto& c : series.columns()) {
      if (c.starts_with("fz_")) cols.push_back(c);
    }
    if (cols.empty()) throw IoError("missing column 'fz_<body>'");
    std::vector<std::vector<double>> data;
    for (const auto& c : cols) data.push_back(series.column(c));
    const auto t = series.column("t");
    out << "t";
    for (const auto& c : cols) out << ',' << c;
    out << ",fz_total\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
      double total = 0.0;
      out << shortest(t[k]);
      for (const auto& d : data) {
        out << ',' << shortest(d[k]);
        total += d[k];
      }
      out << ',' << shortest(total) << '\n';
    }
  }
  return ok;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  } catch (const MaterialError& e) {
    std::fprintf(stderr, "material error: %s\n", e.what());
    return config_error;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "shape error: %s\n", e.what());
    return config_error;
  } catch (const MeshError& e) {
    std::fprintf(stderr, "mesh error: %s\n", e.what());
    return config_error;
  } catch (const InstabilityError& e) {
    std::fprintf(stderr, "instability: %s\n", e.what());
    return instability;
  } catch (const SingularBondError& e) {
    std::fprintf(stderr, "instability: %s\n", e.what());
    return instability;
  } catch (const SingularContactError& e) {
    std::fprintf(stderr, "instability: %s\n", e.what());
    return instability;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return io_error;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return io_error;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grainpd: breakable peridynamic grains with node-pair contact"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config");
  add_common(run_cmd, run_opts, true);

  Common cal_opts;
  std::vector<double> eps{1.0, 0.95, 0.9, 0.85, 0.8};
  auto* cal_cmd = app.add_subcommand("calibrate-cor", "sweep eps_bar_n for a two-particle config");
  add_common(cal_cmd, cal_opts, false);
  cal_cmd->add_option("--eps", eps, "eps_bar_n values")->delimiter(',')->check(CLI::Range(1e-12, 1.0));

  Common cmp_opts;
  std::optional<int> nx, ny;
  std::optional<double> wall_start, wall_speed, settle_time;
  auto* cmp_cmd = app.add_subcommand("compress", "two-phase compression of a packing");
  add_common(cmp_cmd, cmp_opts, true);
  cmp_cmd->add_option("--nx", nx, "particles per row");
  cmp_cmd->add_option("--ny", ny, "rows");
  cmp_cmd->add_option("--wall-start", wall_start, "y of the top wall's lower edge at the start of compression, m");
  cmp_cmd->add_option("--wall-speed", wall_speed, "top wall speed, m/s");
  cmp_cmd->add_option("--settle-time", settle_time, "settling time, s");

  MeshArgs mesh_args;
  auto* mesh_cmd = app.add_subcommand("mesh", "mesh a shape and write it in the text mesh format");
  mesh_cmd->add_option("--kind", mesh_args.kind, "disk, hexagon, concave or rectangle");
  mesh_cmd->add_option("--center", mesh_args.center, "x y")->expected(2);
  mesh_cmd->add_option("--radius", mesh_args.radius, "m");
  mesh_cmd->add_option("--axis", mesh_args.axis, "x y")->expected(2);
  mesh_cmd->add_option("--neck", mesh_args.neck, "half neck width, m (concave)");
  mesh_cmd->add_option("--corner-lo", mesh_args.corner_lo, "x y (rectangle)")->expected(2);
  mesh_cmd->add_option("--corner-hi", mesh_args.corner_hi, "x y (rectangle)")->expected(2);
  mesh_cmd->add_option("--rotation", mesh_args.rotation, "rad");
  mesh_cmd->add_option("--mesh-size", mesh_args.h, "target mesh size, m")->required()->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--output,-o", mesh_args.output, "mesh file")->required();

  std::string records, task, wall = "top", pp_out;
  double window = 1e-3;
  auto* pp_cmd = app.add_subcommand("postprocess", "derive tables from a recorded time series");
  pp_cmd->add_option("--records", records, "time-series CSV")->required();
  pp_cmd->add_option("--task", task, "cor, reaction or fz-count")
      ->required()
      ->check(CLI::IsMember({"cor", "reaction", "fz-count"}));
  pp_cmd->add_option("--window", window, "smoothing window for reaction, s")->check(CLI::NonNegativeNumber);
  pp_cmd->add_option("--wall", wall, "wall name for reaction");
  pp_cmd->add_option("--out", pp_out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  if (run_cmd->parsed()) return guarded([&] { return simulate(load(run_opts), run_opts.dry_run); });
  if (cal_cmd->parsed()) return guarded([&] { return cmd_calibrate(load(cal_opts), eps); });
  if (cmp_cmd->parsed()) {
    return guarded([&] {
      Loaded l = load(cmp_opts);
      if (l.doc.experiment.kind != ExperimentKind::compress) {
        throw ConfigError("experiment.kind", "compress needs a compress config");
      }
      auto& k = l.doc.experiment.compress;
      if (nx) k.nx = *nx;
      if (ny) k.ny = *ny;
      if (wall_start) {
        k.wall_start = *wall_start;
        k.wall_gap.reset();
      }
      if (wall_speed) k.wall_speed = *wall_speed;
      if (settle_time) k.settle_time = *settle_time;
      validate(l.doc);
      return simulate(l, cmp_opts.dry_run);
    });
  }
  if (mesh_cmd->parsed()) return guarded([&] { return cmd_mesh(mesh_args); });
  return guarded([&] { return cmd_postprocess(records, task, window, wall, pp_out); });
}
