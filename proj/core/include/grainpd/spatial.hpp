#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "grainpd/vec2.hpp"

namespace grainpd {

/// Uniform bucket grid over a fixed point set, answering fixed-radius queries.
///
/// Points are binned by a stable counting sort, so within a cell they appear in
/// ascending index order and every query visits candidates in a reproducible
/// order. The grid keeps a view of the points; they must outlive it.
class CellGrid {
 public:
  CellGrid(std::span<const Vec2> points, double cell_size);

  /// Calls `visit(j)` for every point j with |x_j - p| < radius (strict).
  template <class Visitor>
  void for_each_within(const Vec2& p, double radius, Visitor&& visit) const {
    if (points_.empty()) return;
    const double r2 = radius * radius;
    const auto [ix0, iy0] = cell_coords({p.x - radius, p.y - radius});
    const auto [ix1, iy1] = cell_coords({p.x + radius, p.y + radius});
    for (std::int64_t iy = iy0; iy <= iy1; ++iy) {
      for (std::int64_t ix = ix0; ix <= ix1; ++ix) {
        const std::size_t c = static_cast<std::size_t>(iy * nx_ + ix);
        for (std::uint32_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
          const std::uint32_t j = items_[k];
          if ((points_[j] - p).norm2() < r2) visit(j);
        }
      }
    }
  }

  /// All index pairs (i, j), i < j, with |x_i - x_j| < radius, sorted lexicographically.
  [[nodiscard]] std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_within(
      double radius) const;

  [[nodiscard]] double cell_size() const { return cell_size_; }

 private:
  [[nodiscard]] std::pair<std::int64_t, std::int64_t> cell_coords(const Vec2& p) const;

  std::span<const Vec2> points_;
  double cell_size_ = 0.0;
  Vec2 origin_;
  std::int64_t nx_ = 1;
  std::int64_t ny_ = 1;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> items_;
};

/// Minimum distance over distinct index pairs, computed with a CellGrid by
/// doubling the search radius until at least one pair is found.
/// Throws MeshError for fewer than two points.
[[nodiscard]] double min_pair_distance(std::span<const Vec2> points);

}  // namespace grainpd
