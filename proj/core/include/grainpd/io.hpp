#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grainpd/contact.hpp"
#include "grainpd/engine.hpp"
#include "grainpd/experiments.hpp"
#include "grainpd/geometry.hpp"
#include "grainpd/observers.hpp"
#include "grainpd/peridynamics.hpp"

namespace grainpd {

/// One entry of scene.bodies. `mesh_file` replaces the generated outline with
/// an imported mesh (relative paths resolve against the config directory).
struct BodyConfig {
  std::string name;
  ShapeSpec shape;
  std::string mesh_file;
  std::string material;
  bool fixed = false;
  bool wall = false;
  Vec2 velocity;
  std::optional<double> mesh_size;  ///< overrides scene.mesh_size for this body

  friend bool operator==(const BodyConfig&, const BodyConfig&) = default;
};

struct OutputConfig {
  std::string dir = "out";
  int every_n = 0;            ///< snapshot period in steps, 0 disables
  int series_every_n = 100;   ///< time-series sampling period in steps

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

enum class ExperimentKind { none, two_particle, compress };

[[nodiscard]] std::string to_string(ExperimentKind kind);

struct TwoParticleConfig {
  std::string top;     ///< body name, empty means the second body
  std::string bottom;  ///< body name, empty means the first body
  bool stop_after_rebound = true;

  friend bool operator==(const TwoParticleConfig&, const TwoParticleConfig&) = default;
};

struct CompressConfig {
  Vec2 lo;
  Vec2 hi;
  int nx = 5;
  int ny = 5;
  double radius = 1e-3;
  double spread = 0.1;
  double hexagon_fraction = 0.5;
  double min_gap = 0.0;
  std::string particle_material;
  std::string wall_material;
  double wall_thickness = 0.0;  ///< 0 means the wall material's horizon
  double particle_mesh = 0.0;   ///< 0 means scene.mesh_size
  double wall_mesh = 0.0;       ///< 0 means scene.mesh_size
  double settle_time = 0.0;
  double wall_start = 0.0;
  std::optional<double> wall_gap;  ///< overrides wall_start when set
  double wall_speed = 0.0;
  double window = 1e-3;  ///< reaction-force smoothing window, s

  friend bool operator==(const CompressConfig&, const CompressConfig&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::none;
  TwoParticleConfig two_particle;
  CompressConfig compress;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Declarative description of one run. All values are SI.
struct ConfigDocument {
  std::map<std::string, Material> materials;
  Vec2 gravity;
  double mesh_size = 0.0;  ///< default target mesh size for generated bodies
  std::vector<BodyConfig> bodies;
  ContactConfig contact;
  IntegratorConfig integrator;
  OutputConfig output;
  ExperimentConfig experiment;
  std::uint64_t seed = 0;

  friend bool operator==(const ConfigDocument&, const ConfigDocument&) = default;
};

/// Parses and validates YAML text. Errors are ConfigError carrying the dotted
/// key path; the message includes the line number when known.
[[nodiscard]] ConfigDocument parse_config(const std::string& text);
/// Throws IoError if the file cannot be read.
[[nodiscard]] ConfigDocument load_config(const std::filesystem::path& path);
/// YAML text that parses back to an equal document.
[[nodiscard]] std::string serialize_config(const ConfigDocument& doc);

/// Checks cross-references and ranges that the parser cannot see in isolation.
void validate(const ConfigDocument& doc);

/// Meshes all bodies (and the packing box for compression experiments).
/// Bodies from the packing are appended after the listed ones.
[[nodiscard]] Scene build_scene(const ConfigDocument& doc, const std::filesystem::path& base_dir = {});

/// Index of the material named `name`, in map order, as used by build_scene.
[[nodiscard]] std::uint32_t material_index(const ConfigDocument& doc, const std::string& name);

/// Options for the two-particle runner resolved against a scene.
[[nodiscard]] TwoParticleOptions two_particle_options(const ConfigDocument& doc, const Scene& scene);
/// Options for the compression runner; the top wall is the body named "top".
[[nodiscard]] CompressionOptions compression_options(const ConfigDocument& doc, const Scene& scene);

inline constexpr const char* kSnapshotHeader = "id,body,x,y,ux,uy,vx,vy,Z,fixed,volume";

/// Node table: reference position, displacement, velocity, damage, fixity, volume.
void write_snapshot(std::ostream& out, const Simulation& sim);
void write_snapshot(const std::filesystem::path& path, const Simulation& sim);

struct SnapshotRow {
  std::uint32_t id = 0;
  std::uint32_t body = 0;
  Vec2 x;
  Vec2 u;
  Vec2 v;
  double z = 0.0;
  bool fixed = false;
  double volume = 0.0;
};
[[nodiscard]] std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path);

void write_timeseries(std::ostream& out, const TimeSeries& series);
void write_timeseries(const std::filesystem::path& path, const TimeSeries& series);
[[nodiscard]] TimeSeries read_timeseries(std::istream& in);
[[nodiscard]] TimeSeries read_timeseries(const std::filesystem::path& path);

/// Binary, host byte order.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
[[nodiscard]] Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace grainpd
