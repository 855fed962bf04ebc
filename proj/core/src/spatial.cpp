#include "grainpd/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grainpd/error.hpp"

namespace grainpd {

CellGrid::CellGrid(std::span<const Vec2> points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw Error("CellGrid: cell size must be positive");
  if (points.empty()) {
    cell_start_.assign(2, 0);
    return;
  }
  Vec2 lo = points[0];
  Vec2 hi = points[0];
  for (const auto& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  // Bound the cell count by a multiple of the point count; larger cells keep
  // queries exact because the visited cell range grows with the radius.
  const double max_cells = 4.0 * static_cast<double>(points.size()) + 64.0;
  auto count = [&](double cs) {
    return std::floor((hi.x - lo.x) / cs + 1.0) * std::floor((hi.y - lo.y) / cs + 1.0);
  };
  while (count(cell_size_) > max_cells) cell_size_ *= 2.0;

  origin_ = lo;
  nx_ = static_cast<std::int64_t>(std::floor((hi.x - lo.x) / cell_size_)) + 1;
  ny_ = static_cast<std::int64_t>(std::floor((hi.y - lo.y) / cell_size_)) + 1;

  const std::size_t ncell = static_cast<std::size_t>(nx_ * ny_);
  std::vector<std::uint32_t> cell_of(points.size());
  cell_start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [ix, iy] = cell_coords(points[i]);
    cell_of[i] = static_cast<std::uint32_t>(iy * nx_ + ix);
    ++cell_start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
  items_.resize(points.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

std::pair<std::int64_t, std::int64_t> CellGrid::cell_coords(const Vec2& p) const {
  auto clamp_axis = [](double v, std::int64_t n) {
    const double f = std::floor(v);
    if (f < 0.0) return std::int64_t{0};
    if (f >= static_cast<double>(n)) return n - 1;
    return static_cast<std::int64_t>(f);
  };
  return {clamp_axis((p.x - origin_.x) / cell_size_, nx_),
          clamp_axis((p.y - origin_.y) / cell_size_, ny_)};
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> CellGrid::pairs_within(double radius) const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  std::vector<std::uint32_t> hits;
  for (std::uint32_t i = 0; i < points_.size(); ++i) {
    hits.clear();
    for_each_within(points_[i], radius, [&](std::uint32_t j) {
      if (j > i) hits.push_back(j);
    });
    std::sort(hits.begin(), hits.end());
    for (auto j : hits) out.emplace_back(i, j);
  }
  return out;
}

double min_pair_distance(std::span<const Vec2> points) {
  if (points.size() < 2) throw MeshError("mesh size needs at least two nodes");
  Vec2 lo = points[0];
  Vec2 hi = points[0];
  for (const auto& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  const double extent = std::max(hi.x - lo.x, hi.y - lo.y);
  if (extent == 0.0) return 0.0;
  // Typical spacing of a space-filling cloud; the loop below only widens it.
  double radius = std::max(extent / std::sqrt(static_cast<double>(points.size())),
                           extent * 1e-9);
  auto scan = [&](double r) {
    const CellGrid grid(points, r);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < points.size(); ++i) {
      grid.for_each_within(points[i], r, [&](std::uint32_t j) {
        if (j != i) best = std::min(best, distance(points[i], points[j]));
      });
    }
    return best;
  };
  for (;;) {
    const double best = scan(radius);
    if (best < std::numeric_limits<double>::infinity()) {
      // A rescan with twice the candidate removes any doubt about pairs sitting
      // exactly on the strict query boundary.
      return 2.0 * best > radius ? std::min(best, scan(2.0 * best)) : best;
    }
    radius *= 2.0;
  }
}

}  // namespace grainpd
