#include "grainpd/io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "grainpd/error.hpp"
#include "grainpd/numfmt.hpp"

namespace grainpd {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::none: return "none";
    case ExperimentKind::two_particle: return "two_particle";
    case ExperimentKind::compress: return "compress";
  }
  return "none";
}

namespace {

std::string at_line(const YAML::Node& n, const std::string& msg) {
  const auto mark = n.Mark();
  if (mark.line < 0) return msg;
  return "line " + std::to_string(mark.line + 1) + ": " + msg;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// A YAML mapping whose keys must all be consumed; leftovers are rejected.
class Section {
 public:
  Section(std::optional<YAML::Node> node, std::string path) : path_(std::move(path)) {
    if (node) node_ = *node;
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, at_line(node_, "expected a mapping"));
  }

  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] std::string key(const std::string& k) const { return join(path_, k); }

  // Absent keys and explicit nulls both read as "not given".
  std::optional<YAML::Node> get(const std::string& k) {
    seen_.insert(k);
    if (!node_ || !node_.IsMap()) return std::nullopt;
    const YAML::Node& cnode = node_;
    YAML::Node child = cnode[k];
    if (!child.IsDefined() || child.IsNull()) return std::nullopt;
    return child;
  }

  YAML::Node require(const std::string& k) {
    auto n = get(k);
    if (!n) throw ConfigError(key(k), node_ ? at_line(node_, "missing required key") : "missing required key");
    return *n;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto name = kv.first.Scalar();
      if (!seen_.contains(name)) throw ConfigError(key(name), at_line(kv.first, "unknown key"));
    }
  }

  double number(const std::string& k, double fallback) {
    const auto n = get(k);
    return n ? to_number(*n, key(k)) : fallback;
  }
  double number(const std::string& k) { return to_number(require(k), key(k)); }

  template <class Int>
  Int integer(const std::string& k, Int fallback) {
    const auto n = get(k);
    if (!n) return fallback;
    std::optional<Int> v;
    if (n->IsScalar()) v = parse_int<Int>(n->Scalar());
    if (!v) throw ConfigError(key(k), at_line(*n, "expected an integer"));
    return *v;
  }

  bool flag(const std::string& k, bool fallback) {
    const auto n = get(k);
    if (!n) return fallback;
    if (n->IsScalar()) {
      if (n->Scalar() == "true") return true;
      if (n->Scalar() == "false") return false;
    }
    throw ConfigError(key(k), at_line(*n, "expected true or false"));
  }

  std::string text(const std::string& k, const std::string& fallback) {
    const auto n = get(k);
    if (!n) return fallback;
    if (!n->IsScalar()) throw ConfigError(key(k), at_line(*n, "expected a string"));
    return n->Scalar();
  }

  Vec2 vec(const std::string& k, Vec2 fallback) {
    const auto n = get(k);
    if (!n) return fallback;
    if (!n->IsSequence() || n->size() != 2) throw ConfigError(key(k), at_line(*n, "expected [x, y]"));
    return {to_number((*n)[0], key(k)), to_number((*n)[1], key(k))};
  }

  static double to_number(const YAML::Node& n, const std::string& key) {
    std::optional<double> v;
    if (n.IsScalar()) v = parse_double(n.Scalar());
    if (!v) throw ConfigError(key, at_line(n, "expected a number"));
    return *v;
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

Material parse_material(Section s) {
  Material m;
  m.rho = s.number("rho");
  m.kappa = s.number("kappa");
  m.shear = s.number("shear");
  m.gc = s.number("gc");
  m.horizon = s.number("horizon");
  s.finish();
  return m;
}

BodyConfig parse_body(const YAML::Node& node, const std::string& path) {
  Section s(node, path);
  BodyConfig b;
  b.name = s.text("name", "");
  {
    Section shape(s.require("shape"), s.key("shape"));
    b.mesh_file = shape.text("mesh", "");
    if (b.mesh_file.empty()) {
      const YAML::Node kind = shape.require("kind");
      try {
        b.shape.kind = shape_kind_from_string(kind.Scalar());
      } catch (const ShapeError& e) {
        throw ConfigError(shape.key("kind"), at_line(kind, e.what()));
      }
      b.shape.center = shape.vec("center", {});
      b.shape.radius = shape.number("radius", 0.0);
      b.shape.axis = shape.vec("axis", {1.0, 0.0});
      b.shape.neck = shape.number("neck", 0.0);
      b.shape.corner_lo = shape.vec("corner_lo", {});
      b.shape.corner_hi = shape.vec("corner_hi", {});
      b.shape.rotation = shape.number("rotation", 0.0);
    }
    shape.finish();
  }
  b.material = s.text("material", "");
  b.fixed = s.flag("fixed", false);
  b.wall = s.flag("wall", false);
  b.velocity = s.vec("velocity", {});
  if (s.get("mesh_size")) b.mesh_size = s.number("mesh_size");
  s.finish();
  return b;
}

ContactConfig parse_contact(Section s) {
  ContactConfig c;
  if (s.get("radius")) c.radius = s.number("radius");
  c.friction_mu = s.number("friction_mu", c.friction_mu);
  c.friction_enabled = s.flag("friction_enabled", c.friction_enabled);
  const std::string model = s.text("damping_model", to_string(c.damping_model));
  c.damping_model = damping_model_from_string(model);
  c.eps_bar_n = s.number("eps_bar_n", c.eps_bar_n);
  c.c_bar = s.number("c_bar", c.c_bar);
  c.eps_n = s.number("eps_n", c.eps_n);
  c.c = s.number("c", c.c);
  c.rebuild_every = s.integer<int>("rebuild_every", c.rebuild_every);
  s.finish();
  return c;
}

ExperimentConfig parse_experiment(Section s) {
  ExperimentConfig e;
  const std::string kind = s.text("kind", "none");
  if (kind == "none") {
    e.kind = ExperimentKind::none;
  } else if (kind == "two_particle") {
    e.kind = ExperimentKind::two_particle;
    e.two_particle.top = s.text("top", "");
    e.two_particle.bottom = s.text("bottom", "");
    e.two_particle.stop_after_rebound = s.flag("stop_after_rebound", true);
  } else if (kind == "compress") {
    e.kind = ExperimentKind::compress;
    CompressConfig& c = e.compress;
    {
      Section p(s.require("packing"), s.key("packing"));
      c.lo = p.vec("lo", c.lo);
      c.hi = p.vec("hi", c.hi);
      c.nx = p.integer<int>("nx", c.nx);
      c.ny = p.integer<int>("ny", c.ny);
      c.radius = p.number("radius", c.radius);
      c.spread = p.number("spread", c.spread);
      c.hexagon_fraction = p.number("hexagon_fraction", c.hexagon_fraction);
      c.min_gap = p.number("min_gap", c.min_gap);
      p.finish();
    }
    c.particle_material = s.text("particle_material", "");
    c.wall_material = s.text("wall_material", "");
    c.wall_thickness = s.number("wall_thickness", c.wall_thickness);
    c.particle_mesh = s.number("particle_mesh", c.particle_mesh);
    c.wall_mesh = s.number("wall_mesh", c.wall_mesh);
    c.settle_time = s.number("settle_time", c.settle_time);
    c.wall_start = s.number("wall_start", c.wall_start);
    if (s.get("wall_gap")) c.wall_gap = s.number("wall_gap");
    c.wall_speed = s.number("wall_speed", c.wall_speed);
    c.window = s.number("window", c.window);
  } else {
    throw ConfigError(s.key("kind"), "unknown experiment '" + kind + "' (none, two_particle, compress)");
  }
  s.finish();
  return e;
}

// Double-quoted YAML string.
std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string num(double v) { return shortest(v); }
std::string vec(Vec2 v) { return "[" + shortest(v.x) + ", " + shortest(v.y) + "]"; }
const char* boolean(bool b) { return b ? "true" : "false"; }

}  // namespace

ConfigDocument parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("", "empty configuration");

  ConfigDocument doc;
  try {
    Section top(root, "");
    doc.seed = top.integer<std::uint64_t>("seed", 0);
    {
      const YAML::Node mats = top.require("materials");
      if (!mats.IsMap()) throw ConfigError("materials", at_line(mats, "expected a mapping of named materials"));
      for (const auto& kv : mats) {
        const std::string name = kv.first.Scalar();
        doc.materials[name] = parse_material(Section(kv.second, "materials." + name));
      }
    }
    {
      Section scene(top.get("scene"), "scene");
      doc.gravity = scene.vec("gravity", {});
      doc.mesh_size = scene.number("mesh_size", 0.0);
      const auto bodies = scene.get("bodies");
      if (bodies) {
        if (!bodies->IsSequence()) throw ConfigError("scene.bodies", at_line(*bodies, "expected a list"));
        for (std::size_t i = 0; i < bodies->size(); ++i) {
          doc.bodies.push_back(parse_body((*bodies)[i], "scene.bodies[" + std::to_string(i) + "]"));
        }
      }
      scene.finish();
    }
    doc.contact = parse_contact(Section(top.get("contact"), "contact"));
    {
      Section integ(top.get("integrator"), "integrator");
      doc.integrator.dt = integ.number("dt");
      doc.integrator.t_final = integ.number("t_final");
      integ.finish();
    }
    {
      Section out(top.get("output"), "output");
      doc.output.dir = out.text("dir", doc.output.dir);
      doc.output.every_n = out.integer<int>("every_n", doc.output.every_n);
      doc.output.series_every_n = out.integer<int>("series_every_n", doc.output.series_every_n);
      out.finish();
    }
    doc.experiment = parse_experiment(Section(top.get("experiment"), "experiment"));
    top.finish();
  } catch (const YAML::Exception& e) {
    throw ConfigError("", "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  validate(doc);
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ConfigDocument& doc) {
  std::ostringstream o;
  o << "seed: " << doc.seed << "\n";
  o << "materials:\n";
  for (const auto& [name, m] : doc.materials) {
    o << "  " << quote(name) << ":\n";
    o << "    rho: " << num(m.rho) << "\n";
    o << "    kappa: " << num(m.kappa) << "\n";
    o << "    shear: " << num(m.shear) << "\n";
    o << "    gc: " << num(m.gc) << "\n";
    o << "    horizon: " << num(m.horizon) << "\n";
  }
  o << "scene:\n";
  o << "  gravity: " << vec(doc.gravity) << "\n";
  o << "  mesh_size: " << num(doc.mesh_size) << "\n";
  o << "  bodies:";
  if (doc.bodies.empty()) o << " []";
  o << "\n";
  for (const auto& b : doc.bodies) {
    o << "    - name: " << quote(b.name) << "\n";
    o << "      shape:\n";
    if (!b.mesh_file.empty()) {
      o << "        mesh: " << quote(b.mesh_file) << "\n";
    } else {
      const ShapeSpec& s = b.shape;
      o << "        kind: " << to_string(s.kind) << "\n";
      o << "        center: " << vec(s.center) << "\n";
      o << "        radius: " << num(s.radius) << "\n";
      o << "        axis: " << vec(s.axis) << "\n";
      o << "        neck: " << num(s.neck) << "\n";
      o << "        corner_lo: " << vec(s.corner_lo) << "\n";
      o << "        corner_hi: " << vec(s.corner_hi) << "\n";
      o << "        rotation: " << num(s.rotation) << "\n";
    }
    o << "      material: " << quote(b.material) << "\n";
    o << "      fixed: " << boolean(b.fixed) << "\n";
    o << "      wall: " << boolean(b.wall) << "\n";
    o << "      velocity: " << vec(b.velocity) << "\n";
    if (b.mesh_size) o << "      mesh_size: " << num(*b.mesh_size) << "\n";
  }
  const ContactConfig& c = doc.contact;
  o << "contact:\n";
  if (c.radius) o << "  radius: " << num(*c.radius) << "\n";
  o << "  friction_mu: " << num(c.friction_mu) << "\n";
  o << "  friction_enabled: " << boolean(c.friction_enabled) << "\n";
  o << "  damping_model: " << to_string(c.damping_model) << "\n";
  o << "  eps_bar_n: " << num(c.eps_bar_n) << "\n";
  o << "  c_bar: " << num(c.c_bar) << "\n";
  o << "  eps_n: " << num(c.eps_n) << "\n";
  o << "  c: " << num(c.c) << "\n";
  o << "  rebuild_every: " << c.rebuild_every << "\n";
  o << "integrator:\n";
  o << "  dt: " << num(doc.integrator.dt) << "\n";
  o << "  t_final: " << num(doc.integrator.t_final) << "\n";
  o << "output:\n";
  o << "  dir: " << quote(doc.output.dir) << "\n";
  o << "  every_n: " << doc.output.every_n << "\n";
  o << "  series_every_n: " << doc.output.series_every_n << "\n";
  o << "experiment:\n";
  o << "  kind: " << to_string(doc.experiment.kind) << "\n";
  if (doc.experiment.kind == ExperimentKind::two_particle) {
    const auto& t = doc.experiment.two_particle;
    o << "  top: " << quote(t.top) << "\n";
    o << "  bottom: " << quote(t.bottom) << "\n";
    o << "  stop_after_rebound: " << boolean(t.stop_after_rebound) << "\n";
  } else if (doc.experiment.kind == ExperimentKind::compress) {
    const auto& k = doc.experiment.compress;
    o << "  packing:\n";
    o << "    lo: " << vec(k.lo) << "\n";
    o << "    hi: " << vec(k.hi) << "\n";
    o << "    nx: " << k.nx << "\n";
    o << "    ny: " << k.ny << "\n";
    o << "    radius: " << num(k.radius) << "\n";
    o << "    spread: " << num(k.spread) << "\n";
    o << "    hexagon_fraction: " << num(k.hexagon_fraction) << "\n";
    o << "    min_gap: " << num(k.min_gap) << "\n";
    o << "  particle_material: " << quote(k.particle_material) << "\n";
    o << "  wall_material: " << quote(k.wall_material) << "\n";
    o << "  wall_thickness: " << num(k.wall_thickness) << "\n";
    o << "  particle_mesh: " << num(k.particle_mesh) << "\n";
    o << "  wall_mesh: " << num(k.wall_mesh) << "\n";
    o << "  settle_time: " << num(k.settle_time) << "\n";
    o << "  wall_start: " << num(k.wall_start) << "\n";
    if (k.wall_gap) o << "  wall_gap: " << num(*k.wall_gap) << "\n";
    o << "  wall_speed: " << num(k.wall_speed) << "\n";
    o << "  window: " << num(k.window) << "\n";
  }
  return o.str();
}

void validate(const ConfigDocument& doc) {
  if (doc.materials.empty()) throw ConfigError("materials", "at least one material is required");
  for (const auto& [name, m] : doc.materials) {
    try {
      validate(m);
      (void)critical_stretch(m);
    } catch (const MaterialError& e) {
      throw ConfigError("materials." + name, e.what());
    }
  }
  if (!(doc.integrator.dt > 0.0) || !std::isfinite(doc.integrator.dt)) {
    throw ConfigError("integrator.dt", "time step must be positive");
  }
  if (!(doc.integrator.t_final >= doc.integrator.dt) || !std::isfinite(doc.integrator.t_final)) {
    throw ConfigError("integrator.t_final", "final time must be at least one time step");
  }
  validate(doc.contact);
  if (doc.output.every_n < 0) throw ConfigError("output.every_n", "must be non-negative");
  if (doc.output.series_every_n < 1) throw ConfigError("output.series_every_n", "must be at least 1");

  const bool compress = doc.experiment.kind == ExperimentKind::compress;
  if (doc.bodies.empty() && !compress) throw ConfigError("scene.bodies", "scene has no bodies");
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc.bodies.size(); ++i) {
    const BodyConfig& b = doc.bodies[i];
    const std::string key = "scene.bodies[" + std::to_string(i) + "]";
    if (b.name.empty()) throw ConfigError(key + ".name", "every body needs a name");
    if (!names.insert(b.name).second) throw ConfigError(key + ".name", "duplicate body name '" + b.name + "'");
    if (!doc.materials.contains(b.material)) {
      throw ConfigError(key + ".material", "unknown material '" + b.material + "'");
    }
    if (b.mesh_file.empty()) {
      try {
        validate(b.shape);
      } catch (const ShapeError& e) {
        throw ConfigError(key + ".shape", e.what());
      }
      const double h = b.mesh_size.value_or(doc.mesh_size);
      if (!(h > 0.0)) throw ConfigError(key + ".mesh_size", "needs a positive mesh size (or scene.mesh_size)");
    }
    if (b.wall && !b.fixed) throw ConfigError(key + ".fixed", "walls must be fixed");
  }

  if (doc.experiment.kind == ExperimentKind::two_particle) {
    const auto& t = doc.experiment.two_particle;
    if (doc.bodies.size() < 2) throw ConfigError("experiment", "two-particle test needs two bodies");
    if (!t.top.empty() && !names.contains(t.top)) throw ConfigError("experiment.top", "unknown body '" + t.top + "'");
    if (!t.bottom.empty() && !names.contains(t.bottom)) {
      throw ConfigError("experiment.bottom", "unknown body '" + t.bottom + "'");
    }
  }
  if (compress) {
    const auto& k = doc.experiment.compress;
    if (!doc.materials.contains(k.particle_material)) {
      throw ConfigError("experiment.particle_material", "unknown material '" + k.particle_material + "'");
    }
    if (!doc.materials.contains(k.wall_material)) {
      throw ConfigError("experiment.wall_material", "unknown material '" + k.wall_material + "'");
    }
    if (!(k.hi.x > k.lo.x && k.hi.y > k.lo.y)) throw ConfigError("experiment.packing", "hi must exceed lo");
    if (k.wall_thickness < 0.0) throw ConfigError("experiment.wall_thickness", "must be non-negative");
    if (!(std::max(k.particle_mesh, doc.mesh_size) > 0.0) || k.particle_mesh < 0.0) {
      throw ConfigError("experiment.particle_mesh", "needs a positive mesh size (or scene.mesh_size)");
    }
    if (!(std::max(k.wall_mesh, doc.mesh_size) > 0.0) || k.wall_mesh < 0.0) {
      throw ConfigError("experiment.wall_mesh", "needs a positive mesh size (or scene.mesh_size)");
    }
    if (!(k.settle_time >= 0.0)) throw ConfigError("experiment.settle_time", "must be non-negative");
    if (!(doc.integrator.t_final > k.settle_time)) {
      throw ConfigError("integrator.t_final", "must exceed experiment.settle_time");
    }
    if (!(k.wall_speed >= 0.0)) throw ConfigError("experiment.wall_speed", "must be non-negative");
    if (k.wall_gap && !(*k.wall_gap >= 0.0)) throw ConfigError("experiment.wall_gap", "must be non-negative");
    if (!(k.window >= 0.0)) throw ConfigError("experiment.window", "must be non-negative");
    if (names.contains("top") || names.contains("bottom") || names.contains("left") || names.contains("right")) {
      throw ConfigError("scene.bodies", "names top, bottom, left and right are reserved for the box walls");
    }
  }
}

std::uint32_t material_index(const ConfigDocument& doc, const std::string& name) {
  const auto it = doc.materials.find(name);
  if (it == doc.materials.end()) throw ConfigError("materials", "unknown material '" + name + "'");
  return static_cast<std::uint32_t>(std::distance(doc.materials.begin(), it));
}

Scene build_scene(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  validate(doc);
  Scene scene;
  for (const auto& [name, m] : doc.materials) scene.materials.push_back(m);
  scene.gravity = doc.gravity;
  scene.contact = doc.contact;
  scene.integrator = doc.integrator;
  scene.seed = doc.seed;

  for (const BodyConfig& bc : doc.bodies) {
    const std::uint32_t mat = material_index(doc, bc.material);
    Body body;
    if (!bc.mesh_file.empty()) {
      std::filesystem::path p = bc.mesh_file;
      if (p.is_relative()) p = base_dir / p;
      body.name = bc.name;
      body.material = mat;
      body.fixed = bc.fixed;
      body.velocity = bc.velocity;
      body.cloud = to_meshless(read_mesh_file(p.string()));
    } else {
      body = make_body(bc.name, bc.shape, bc.mesh_size.value_or(doc.mesh_size), mat, bc.fixed, bc.velocity);
    }
    body.wall = body.wall || bc.wall;
    body.fixed = body.fixed || body.wall;
    scene.bodies.push_back(std::move(body));
  }

  if (doc.experiment.kind == ExperimentKind::compress) {
    const CompressConfig& k = doc.experiment.compress;
    BoxSceneSpec box;
    box.packing = {k.lo, k.hi, k.nx, k.ny, k.radius, k.spread, k.hexagon_fraction, k.min_gap, doc.seed};
    box.particle_material = material_index(doc, k.particle_material);
    box.wall_material = material_index(doc, k.wall_material);
    box.wall_thickness = k.wall_thickness > 0.0 ? k.wall_thickness : doc.materials.at(k.wall_material).horizon;
    box.particle_mesh = k.particle_mesh > 0.0 ? k.particle_mesh : doc.mesh_size;
    box.wall_mesh = k.wall_mesh > 0.0 ? k.wall_mesh : doc.mesh_size;
    for (auto& b : build_box_bodies(box)) scene.bodies.push_back(std::move(b));
  }
  validate(scene);
  return scene;
}

TwoParticleOptions two_particle_options(const ConfigDocument& doc, const Scene& scene) {
  TwoParticleOptions opts;
  auto lookup = [&](const std::string& name, std::size_t fallback, const char* key) {
    if (name.empty()) return fallback;
    for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
      if (scene.bodies[b].name == name) return b;
    }
    throw ConfigError(key, "unknown body '" + name + "'");
  };
  opts.top = lookup(doc.experiment.two_particle.top, 1, "experiment.top");
  opts.bottom = lookup(doc.experiment.two_particle.bottom, 0, "experiment.bottom");
  opts.stop_after_rebound = doc.experiment.two_particle.stop_after_rebound;
  opts.sample_every = doc.output.series_every_n;
  return opts;
}

CompressionOptions compression_options(const ConfigDocument& doc, const Scene& scene) {
  const CompressConfig& k = doc.experiment.compress;
  CompressionOptions opts;
  opts.top_wall = scene.bodies.size();
  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    if (scene.bodies[b].name == "top") opts.top_wall = b;
  }
  if (opts.top_wall == scene.bodies.size()) throw ConfigError("experiment", "scene has no wall named 'top'");
  opts.settle_time = k.settle_time;
  opts.wall_start = k.wall_start;
  opts.wall_gap = k.wall_gap;
  opts.wall_speed = k.wall_speed;
  opts.compress_time = doc.integrator.t_final - k.settle_time;
  opts.sample_every = doc.output.series_every_n;
  return opts;
}

// ---- CSV ----

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_snapshot(std::ostream& out, const Simulation& sim) {
  const auto z = sim.damage();
  const auto ref = sim.reference();
  const auto u = sim.displacement();
  const auto v = sim.velocity();
  const auto vol = sim.volume();
  const auto body = sim.body_of();
  out << kSnapshotHeader << '\n';
  // Global ids are contiguous per body, so id order is (body, id) order.
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out << i << ',' << body[i] << ',' << shortest(ref[i].x) << ',' << shortest(ref[i].y) << ',' << shortest(u[i].x)
        << ',' << shortest(u[i].y) << ',' << shortest(v[i].x) << ',' << shortest(v[i].y) << ',' << shortest(z[i])
        << ',' << (sim.scene().bodies[body[i]].fixed ? 1 : 0) << ',' << shortest(vol[i]) << '\n';
  }
}

void write_snapshot(const std::filesystem::path& path, const Simulation& sim) {
  auto out = open_out(path);
  write_snapshot(out, sim);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  strip_cr(line);
  if (line != kSnapshotHeader) throw IoError("'" + path.string() + "' is not a snapshot file");
  std::vector<SnapshotRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    auto bad = [&] { return IoError(path.string() + ":" + std::to_string(lineno) + ": malformed snapshot row"); };
    if (f.size() != 11) throw bad();
    SnapshotRow r;
    const auto id = parse_int<std::uint32_t>(f[0]);
    const auto body = parse_int<std::uint32_t>(f[1]);
    const auto fixed = parse_int<int>(f[9]);
    double d[8];
    const int cols[8] = {2, 3, 4, 5, 6, 7, 8, 10};
    for (int k = 0; k < 8; ++k) {
      const auto v = parse_double(f[cols[k]]);
      if (!v) throw bad();
      d[k] = *v;
    }
    if (!id || !body || !fixed) throw bad();
    r.id = *id;
    r.body = *body;
    r.x = {d[0], d[1]};
    r.u = {d[2], d[3]};
    r.v = {d[4], d[5]};
    r.z = d[6];
    r.fixed = *fixed != 0;
    r.volume = d[7];
    rows.push_back(r);
  }
  return rows;
}

void write_timeseries(std::ostream& out, const TimeSeries& series) {
  const auto& cols = series.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& row : series.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << shortest(row[c]);
    out << '\n';
  }
}

void write_timeseries(const std::filesystem::path& path, const TimeSeries& series) {
  auto out = open_out(path);
  write_timeseries(out, series);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

TimeSeries read_timeseries(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("time series is empty");
  strip_cr(line);
  TimeSeries series(split_csv(line));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split_csv(line)) {
      const auto v = parse_double(tok);
      if (!v) throw IoError("line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      row.push_back(*v);
    }
    try {
      series.append(std::move(row));
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return series;
}

TimeSeries read_timeseries(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_timeseries(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---- checkpoint ----

namespace {

constexpr char kMagic[8] = {'G', 'P', 'D', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void size(std::size_t n) { pod<std::uint64_t>(n); }
  void vecs(const std::vector<Vec2>& v) {
    size(v.size());
    for (const auto& a : v) {
      pod(a.x);
      pod(a.y);
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw IoError("checkpoint is truncated");
    return v;
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw IoError("checkpoint is truncated");
  }
  std::size_t size(std::size_t limit = std::size_t{1} << 34) {
    const auto n = pod<std::uint64_t>();
    if (n > limit) throw IoError("checkpoint has an implausible length field");
    return static_cast<std::size_t>(n);
  }
  std::vector<Vec2> vecs() {
    std::vector<Vec2> v(size());
    for (auto& a : v) {
      a.x = pod<double>();
      a.y = pod<double>();
    }
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  Writer w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.pod(cp.step);
  w.pod<std::uint8_t>(cp.bootstrapped ? 1 : 0);
  w.vecs(cp.u);
  w.vecs(cp.v);
  w.size(cp.bonds.size());
  for (const auto& b : cp.bonds) {
    w.size(b.size());
    w.bytes(b.data(), b.size());
  }
  w.size(cp.motions.size());
  for (const auto& m : cp.motions) {
    for (double d : {m.shift.x, m.shift.y, m.velocity.x, m.velocity.y, m.t0}) w.pod(d);
  }
  w.size(cp.rng_state.size());
  w.bytes(cp.rng_state.data(), cp.rng_state.size());
  w.size(cp.contact_candidates.size());
  for (const auto& p : cp.contact_candidates) {
    w.pod(p.a);
    w.pod(p.b);
    w.pod(p.body_a);
    w.pod(p.body_b);
    w.pod(p.distance);
    w.pod(p.e_n.x);
    w.pod(p.e_n.y);
  }
  w.pod(cp.contact_last_build);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  Reader r(in);
  char magic[sizeof(kMagic)];
  try {
    r.bytes(magic, sizeof(magic));
  } catch (const IoError&) {
    throw IoError("'" + path.string() + "' is not a checkpoint");
  }
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("'" + path.string() + "' is not a checkpoint");
  Checkpoint cp;
  cp.step = r.pod<std::int64_t>();
  cp.bootstrapped = r.pod<std::uint8_t>() != 0;
  cp.u = r.vecs();
  cp.v = r.vecs();
  cp.bonds.resize(r.size());
  for (auto& b : cp.bonds) {
    b.resize(r.size());
    r.bytes(b.data(), b.size());
  }
  cp.motions.resize(r.size());
  for (auto& m : cp.motions) {
    m.shift.x = r.pod<double>();
    m.shift.y = r.pod<double>();
    m.velocity.x = r.pod<double>();
    m.velocity.y = r.pod<double>();
    m.t0 = r.pod<double>();
  }
  cp.rng_state.resize(r.size());
  r.bytes(cp.rng_state.data(), cp.rng_state.size());
  cp.contact_candidates.resize(r.size());
  for (auto& p : cp.contact_candidates) {
    p.a = r.pod<std::uint32_t>();
    p.b = r.pod<std::uint32_t>();
    p.body_a = r.pod<std::uint32_t>();
    p.body_b = r.pod<std::uint32_t>();
    p.distance = r.pod<double>();
    p.e_n.x = r.pod<double>();
    p.e_n.y = r.pod<double>();
  }
  cp.contact_last_build = r.pod<std::int64_t>();
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("'" + path.string() + "' has trailing data");
  return cp;
}

}  // namespace grainpd
