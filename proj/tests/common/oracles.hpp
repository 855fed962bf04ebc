#pragma once

// Independent brute-force references. Deliberately naive: no spatial index,
// no shared code with the library beyond the value types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "grainpd/vec2.hpp"

namespace oracle {

using grainpd::Vec2;

inline double shoelace(std::span<const Vec2> p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Vec2& a = p[k];
    const Vec2& b = p[(k + 1) % p.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

inline double min_distance(std::span<const Vec2> p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double dx = p[i].x - p[j].x;
      const double dy = p[i].y - p[j].y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
  }
  return best;
}

// (a, b) with a < b, different bodies, |z_a - z_b| < radius, sorted.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> cross_pairs(std::span<const Vec2> z,
                                                                        std::span<const std::uint32_t> body,
                                                                        double radius) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t i = 0; i < z.size(); ++i) {
    for (std::uint32_t j = i + 1; j < z.size(); ++j) {
      if (body[i] == body[j]) continue;
      const double dx = z[i].x - z[j].x;
      const double dy = z[i].y - z[j].y;
      if (dx * dx + dy * dy < radius * radius) out.emplace_back(i, j);
    }
  }
  return out;
}

// m_i = sum_{|x_j - x_i| < eps, j != i} r^2 (1 - r/eps) V_j
inline double weighted_volume(std::size_t i, std::span<const Vec2> x, std::span<const double> vol, double eps) {
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const double r = std::hypot(x[j].x - x[i].x, x[j].y - x[i].y);
    if (r < eps) m += r * r * (1.0 - r / eps) * vol[j];
  }
  return m;
}

// Z_i = sup over the horizon of |u_j - u_i| / (r s0)
inline double damage(std::size_t i, std::span<const Vec2> x, std::span<const Vec2> u, double eps, double s0) {
  double z = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const double r = std::hypot(x[j].x - x[i].x, x[j].y - x[i].y);
    if (r >= eps) continue;
    z = std::max(z, std::hypot(u[j].x - u[i].x, u[j].y - u[i].y) / (r * s0));
  }
  return z;
}

// Mean of y over samples whose time lies within window/2 of t_i.
inline std::vector<double> moving_average(std::span<const double> t, std::span<const double> y, double window) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (window <= 0.0) {
      out[i] = y[i];
      continue;
    }
    double s = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (std::abs(t[k] - t[i]) <= 0.5 * window) {
        s += y[k];
        ++n;
      }
    }
    out[i] = s / n;
  }
  return out;
}

}  // namespace oracle
