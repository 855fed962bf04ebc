#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grainpd/vec2.hpp"

namespace grainpd {

enum class ShapeKind { disk, hexagon, concave, rectangle };

[[nodiscard]] std::string to_string(ShapeKind kind);
/// Throws ShapeError for unknown names.
[[nodiscard]] ShapeKind shape_kind_from_string(const std::string& name);

/// Parameters of a particle or wall outline. Units are meters and radians.
///
/// Disk, hexagon and concave shapes use `center`, `radius` and `axis`; the
/// concave shape also uses `neck`, the half-width of its waist. Rectangles use
/// the two opposite corners. `rotation` turns the axis (or the rectangle)
/// counter-clockwise about the center.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::disk;
  Vec2 center;
  double radius = 0.0;
  Vec2 axis{1.0, 0.0};
  double neck = 0.0;
  Vec2 corner_lo;
  Vec2 corner_hi;
  double rotation = 0.0;

  friend bool operator==(const ShapeSpec&, const ShapeSpec&) = default;
};

/// Closed polygon, counter-clockwise, last vertex not repeated.
using Polygon = std::vector<Vec2>;

/// Validates the shape parameters; throws ShapeError on degenerate input.
void validate(const ShapeSpec& spec);

/// Outline of the shape. `target_h` only matters for disks, which become the
/// inscribed regular N-gon with N = max(16, ceil(2*pi*R / target_h)).
///
/// Vertex 0 always sits at center + R*axis (after rotation) for the radial
/// shapes. The concave shape is the hexagon with two extra vertices at the
/// midpoints of the edges crossing the line perpendicular to the axis, pulled
/// in to distance `neck` from the center.
[[nodiscard]] Polygon generate_shape(const ShapeSpec& spec, double target_h);

/// Signed shoelace area (positive for counter-clockwise polygons).
[[nodiscard]] double polygon_area(std::span<const Vec2> polygon);

/// Area centroid of a simple polygon.
[[nodiscard]] Vec2 polygon_centroid(std::span<const Vec2> polygon);

/// True when no two non-adjacent edges intersect.
[[nodiscard]] bool is_simple(std::span<const Vec2> polygon);

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Signed area of triangle t of the mesh.
[[nodiscard]] double triangle_area(const TriMesh& mesh, std::size_t t);

/// Throws MeshError if an index is out of range, a triangle is not strictly
/// counter-clockwise, or two nodes coincide within 1e-12 m.
void validate(const TriMesh& mesh);

/// Conforming triangulation of a polygon with edge lengths close to `target_h`.
///
/// Rectangles get a structured grid. Any polygon that is star-shaped with
/// respect to its area centroid is filled with scaled copies of its outline
/// (radial layers) that are zipped together; the outermost layer keeps every
/// input vertex so the triangulated area equals the polygon area.
/// Throws MeshError for polygons outside these two families.
[[nodiscard]] TriMesh triangulate(std::span<const Vec2> polygon, double target_h);

/// Nodes with lumped volumes (area x 1 m thickness) and the cloud mesh size.
struct MeshlessCloud {
  std::vector<Vec2> nodes;
  std::vector<double> volumes;
  double mesh_size = 0.0;
};

/// Vertex-based lumping: each node receives one third of every incident triangle's area.
[[nodiscard]] MeshlessCloud to_meshless(const TriMesh& mesh);

/// Minimum distance between two distinct nodes.
[[nodiscard]] double mesh_size(std::span<const Vec2> nodes);

/// Text mesh format: `nodes N`, N lines `id x y`, `triangles M`, M lines `id n1 n2 n3`.
/// Lines starting with '#' are comments.
[[nodiscard]] TriMesh read_mesh(std::istream& in);
[[nodiscard]] TriMesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const TriMesh& mesh);

}  // namespace grainpd
