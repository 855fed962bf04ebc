#include "grainpd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "grainpd/error.hpp"
#include "grainpd/numfmt.hpp"
#include "grainpd/spatial.hpp"

namespace grainpd {

namespace {

constexpr double kPi = std::numbers::pi;

// Turning angle above which an outline vertex is kept in every radial layer.
constexpr double kCornerTurn = 25.0 * kPi / 180.0;

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::disk: return "disk";
    case ShapeKind::hexagon: return "hexagon";
    case ShapeKind::concave: return "concave";
    case ShapeKind::rectangle: return "rectangle";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "disk") return ShapeKind::disk;
  if (name == "hexagon") return ShapeKind::hexagon;
  if (name == "concave") return ShapeKind::concave;
  if (name == "rectangle") return ShapeKind::rectangle;
  throw ShapeError("unknown shape kind '" + name + "'");
}

void validate(const ShapeSpec& spec) {
  if (spec.kind == ShapeKind::rectangle) {
    if (!(spec.corner_hi.x > spec.corner_lo.x) || !(spec.corner_hi.y > spec.corner_lo.y)) {
      throw ShapeError("rectangle corners must satisfy lo < hi componentwise");
    }
    return;
  }
  if (!(spec.radius > 0.0)) throw ShapeError("shape radius must be positive");
  if (std::abs(spec.axis.norm() - 1.0) > 1e-12) throw ShapeError("shape axis must be a unit vector");
  if (spec.kind == ShapeKind::concave && !(spec.neck > 0.0 && spec.neck < spec.radius)) {
    throw ShapeError("concave shape needs 0 < neck half-width < radius");
  }
}

Polygon generate_shape(const ShapeSpec& spec, double target_h) {
  validate(spec);
  Polygon poly;
  if (spec.kind == ShapeKind::rectangle) {
    const Vec2 mid = 0.5 * (spec.corner_lo + spec.corner_hi);
    const Vec2 corners[4] = {spec.corner_lo,
                             {spec.corner_hi.x, spec.corner_lo.y},
                             spec.corner_hi,
                             {spec.corner_lo.x, spec.corner_hi.y}};
    for (const auto& c : corners) {
      poly.push_back(spec.rotation == 0.0 ? c : mid + rotate(c - mid, spec.rotation));
    }
    return poly;
  }

  const Vec2 axis = spec.rotation == 0.0 ? spec.axis : rotate(spec.axis, spec.rotation);
  auto at = [&](double angle, double dist) { return spec.center + dist * rotate(axis, angle); };

  switch (spec.kind) {
    case ShapeKind::disk: {
      if (!(target_h > 0.0)) throw ShapeError("disk outline needs a positive target mesh size");
      const auto n = std::max<std::size_t>(
          16, static_cast<std::size_t>(std::ceil(2.0 * kPi * spec.radius / target_h)));
      for (std::size_t k = 0; k < n; ++k) {
        poly.push_back(at(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n), spec.radius));
      }
      break;
    }
    case ShapeKind::hexagon:
      for (int k = 0; k < 6; ++k) poly.push_back(at(k * kPi / 3.0, spec.radius));
      break;
    case ShapeKind::concave:
      // Hexagon vertices at 0, 60, ..., 300 degrees from the axis, plus the
      // two waist vertices at +-90 degrees.
      for (int k = 0; k < 6; ++k) {
        poly.push_back(at(k * kPi / 3.0, spec.radius));
        if (k == 1) poly.push_back(at(0.5 * kPi, spec.neck));
        if (k == 4) poly.push_back(at(1.5 * kPi, spec.neck));
      }
      break;
    case ShapeKind::rectangle:
      break;
  }
  return poly;
}

double polygon_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

Vec2 polygon_centroid(std::span<const Vec2> polygon) {
  // Shift to the first vertex to avoid cancellation far from the origin.
  const Vec2 o = polygon.front();
  double a2 = 0.0;
  Vec2 acc;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2 p = polygon[i] - o;
    const Vec2 q = polygon[(i + 1) % polygon.size()] - o;
    const double c = cross(p, q);
    a2 += c;
    acc += c * (p + q);
  }
  return o + acc / (3.0 * a2);
}

namespace {

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

}  // namespace

bool is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

double triangle_area(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.nodes[tri[0]];
  return 0.5 * cross(mesh.nodes[tri[1]] - a, mesh.nodes[tri[2]] - a);
}

void validate(const TriMesh& mesh) {
  const auto n = mesh.nodes.size();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto idx : mesh.triangles[t]) {
      if (idx >= n) throw MeshError("triangle " + std::to_string(t) + " references missing node");
    }
    if (!(triangle_area(mesh, t) > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) + " is degenerate or clockwise");
    }
  }
  if (n >= 2 && min_pair_distance(mesh.nodes) <= 1e-12) {
    throw MeshError("mesh has coincident nodes");
  }
}

namespace {

std::size_t segments_for(double length, double target_h) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(length / target_h)));
}

bool is_rectangle(std::span<const Vec2> p) {
  if (p.size() != 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e0 = p[(i + 1) % 4] - p[i];
    const Vec2 e1 = p[(i + 2) % 4] - p[(i + 1) % 4];
    if (std::abs(dot(e0, e1)) > 1e-9 * e0.norm() * e1.norm()) return false;
  }
  return true;
}

TriMesh grid_rectangle(std::span<const Vec2> p, double target_h) {
  const Vec2 ea = p[1] - p[0];
  const Vec2 eb = p[3] - p[0];
  std::size_t na = segments_for(ea.norm(), target_h);
  std::size_t nb = segments_for(eb.norm(), target_h);
  // Keep quad diagonals (the longest triangle edges) within twice the target.
  while (std::hypot(ea.norm() / static_cast<double>(na), eb.norm() / static_cast<double>(nb)) >
         2.0 * target_h) {
    if (ea.norm() / static_cast<double>(na) >= eb.norm() / static_cast<double>(nb)) {
      ++na;
    } else {
      ++nb;
    }
  }
  TriMesh mesh;
  for (std::size_t j = 0; j <= nb; ++j) {
    for (std::size_t i = 0; i <= na; ++i) {
      mesh.nodes.push_back(p[0] + ea * (static_cast<double>(i) / static_cast<double>(na)) +
                           eb * (static_cast<double>(j) / static_cast<double>(nb)));
    }
  }
  auto id = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * (na + 1) + i); };
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t i = 0; i < na; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return mesh;
}

// Resamples one closed outline. `keep` marks vertices that must survive; the
// chains between kept vertices are split into near-uniform arc-length pieces.
std::vector<Vec2> resample_layer(const std::vector<Vec2>& outline, const std::vector<bool>& keep,
                                 double target_h) {
  const std::size_t n = outline.size();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) kept.push_back(i);
  }
  std::vector<Vec2> out;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const std::size_t begin = kept[c];
    const std::size_t end = kept[(c + 1) % kept.size()];
    // Vertices of this chain from begin to end inclusive, walking forward.
    std::vector<Vec2> chain{outline[begin]};
    for (std::size_t i = (begin + 1) % n;; i = (i + 1) % n) {
      chain.push_back(outline[i]);
      if (i == end) break;
    }
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < chain.size(); ++i) cum.push_back(cum.back() + distance(chain[i - 1], chain[i]));
    const std::size_t m = segments_for(cum.back(), target_h);
    out.push_back(chain.front());
    std::size_t seg = 1;
    for (std::size_t s = 1; s < m; ++s) {
      const double target = cum.back() * static_cast<double>(s) / static_cast<double>(m);
      while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
      const double t = (target - cum[seg - 1]) / (cum[seg] - cum[seg - 1]);
      out.push_back(chain[seg - 1] + t * (chain[seg] - chain[seg - 1]));
    }
  }
  return out;
}

double angle_from(const Vec2& center, const Vec2& p, double start) {
  double a = std::atan2(p.y - center.y, p.x - center.x) - start;
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

TriMesh radial_layers(std::span<const Vec2> poly, double target_h) {
  const std::size_t n = poly.size();
  const Vec2 c = polygon_centroid(poly);
  double rho_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cross(poly[i] - c, poly[(i + 1) % n] - c) > 0.0)) {
      throw MeshError("polygon is not star-shaped about its centroid; import an external mesh");
    }
    rho_max = std::max(rho_max, distance(poly[i], c));
  }
  const std::size_t layers = segments_for(rho_max, target_h);

  std::vector<bool> corner(n, false);
  corner[0] = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = poly[i] - poly[(i + n - 1) % n];
    const Vec2 e1 = poly[(i + 1) % n] - poly[i];
    const double turn = std::atan2(cross(e0, e1), dot(e0, e1));
    if (std::abs(turn) >= kCornerTurn) corner[i] = true;
  }

  TriMesh mesh;
  mesh.nodes.push_back(c);
  const double start = std::atan2(poly[0].y - c.y, poly[0].x - c.x);

  std::vector<std::uint32_t> prev_ids;
  std::vector<double> prev_ang;
  for (std::size_t k = 1; k <= layers; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(layers);
    std::vector<Vec2> outline(n);
    for (std::size_t i = 0; i < n; ++i) outline[i] = k == layers ? poly[i] : c + s * (poly[i] - c);
    const std::vector<bool> keep = k == layers ? std::vector<bool>(n, true) : corner;
    const std::vector<Vec2> layer = resample_layer(outline, keep, target_h);

    std::vector<std::uint32_t> ids;
    std::vector<double> ang;
    for (const auto& p : layer) {
      ids.push_back(static_cast<std::uint32_t>(mesh.nodes.size()));
      ang.push_back(ids.size() == 1 ? 0.0 : angle_from(c, p, start));
      mesh.nodes.push_back(p);
    }
    if (k == 1) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        mesh.triangles.push_back({0, ids[i], ids[(i + 1) % ids.size()]});
      }
    } else {
      // Zip the previous (inner) loop to this (outer) loop by polar angle.
      const std::size_t na = prev_ids.size();
      const std::size_t nb = ids.size();
      std::size_t i = 0;
      std::size_t j = 0;
      auto next_ang = [](const std::vector<double>& a, std::size_t idx) {
        return idx + 1 < a.size() ? a[idx + 1] : 2.0 * kPi;
      };
      while (i < na || j < nb) {
        const bool advance_inner = j == nb || (i < na && next_ang(prev_ang, i) <= next_ang(ang, j));
        if (advance_inner) {
          mesh.triangles.push_back({prev_ids[i], ids[j % nb], prev_ids[(i + 1) % na]});
          ++i;
        } else {
          mesh.triangles.push_back({prev_ids[i % na], ids[j], ids[(j + 1) % nb]});
          ++j;
        }
      }
    }
    prev_ids = std::move(ids);
    prev_ang = std::move(ang);
  }
  return mesh;
}

}  // namespace

TriMesh triangulate(std::span<const Vec2> polygon, double target_h) {
  if (polygon.size() < 3) throw MeshError("polygon needs at least three vertices");
  if (!(target_h > 0.0)) throw MeshError("target mesh size must be positive");
  if (!(polygon_area(polygon) > 0.0)) throw MeshError("polygon must be counter-clockwise with positive area");
  if (!is_simple(polygon)) throw MeshError("polygon self-intersects");

  TriMesh mesh = is_rectangle(polygon) ? grid_rectangle(polygon, target_h) : radial_layers(polygon, target_h);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!(triangle_area(mesh, t) > 0.0)) {
      throw MeshError("triangulation produced an inverted triangle; refine target mesh size");
    }
  }
  return mesh;
}

MeshlessCloud to_meshless(const TriMesh& mesh) {
  if (mesh.nodes.empty() || mesh.triangles.empty()) throw MeshError("cannot lump an empty mesh");
  MeshlessCloud cloud;
  cloud.nodes = mesh.nodes;
  cloud.volumes.assign(mesh.nodes.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double third = triangle_area(mesh, t) / 3.0;
    for (auto idx : mesh.triangles[t]) cloud.volumes[idx] += third;
  }
  for (std::size_t i = 0; i < cloud.volumes.size(); ++i) {
    if (!(cloud.volumes[i] > 0.0)) throw MeshError("node " + std::to_string(i) + " belongs to no triangle");
  }
  cloud.mesh_size = mesh_size(cloud.nodes);
  return cloud;
}

double mesh_size(std::span<const Vec2> nodes) { return min_pair_distance(nodes); }

TriMesh read_mesh(std::istream& in) {
  TriMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  auto next_tokens = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ss(line);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      if (tok.empty() || tok[0][0] == '#') continue;
      return tok;
    }
    return {};
  };
  auto fail = [&](const std::string& what) {
    return MeshError("mesh line " + std::to_string(lineno) + ": " + what);
  };
  auto count_header = [&](const char* keyword) {
    const auto tok = next_tokens();
    if (tok.size() != 2 || tok[0] != keyword) throw fail(std::string("expected '") + keyword + " <count>'");
    const auto count = parse_int<std::size_t>(tok[1]);
    if (!count) throw fail("bad count");
    return *count;
  };

  const std::size_t nn = count_header("nodes");
  mesh.nodes.resize(nn);
  std::vector<bool> seen(nn, false);
  for (std::size_t k = 0; k < nn; ++k) {
    const auto tok = next_tokens();
    if (tok.size() != 3) throw fail("expected '<id> <x> <y>'");
    const auto id = parse_int<std::size_t>(tok[0]);
    const auto x = parse_double(tok[1]);
    const auto y = parse_double(tok[2]);
    if (!id || !x || !y) throw fail("malformed node record");
    if (*id >= nn || seen[*id]) throw fail("node id out of range or repeated");
    seen[*id] = true;
    mesh.nodes[*id] = {*x, *y};
  }
  const std::size_t nt = count_header("triangles");
  mesh.triangles.resize(nt);
  std::vector<bool> tseen(nt, false);
  for (std::size_t k = 0; k < nt; ++k) {
    const auto tok = next_tokens();
    if (tok.size() != 4) throw fail("expected '<id> <n1> <n2> <n3>'");
    const auto id = parse_int<std::size_t>(tok[0]);
    if (!id || *id >= nt || tseen[*id]) throw fail("triangle id out of range or repeated");
    tseen[*id] = true;
    for (int v = 0; v < 3; ++v) {
      const auto n = parse_int<std::uint32_t>(tok[v + 1]);
      if (!n) throw fail("malformed triangle record");
      mesh.triangles[*id][v] = *n;
    }
  }
  validate(mesh);
  return mesh;
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "nodes " << mesh.nodes.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << i << ' ' << shortest(mesh.nodes[i].x) << ' ' << shortest(mesh.nodes[i].y) << '\n';
  }
  out << "triangles " << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
}

}  // namespace grainpd
