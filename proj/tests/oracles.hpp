#pragma once

// Reference computations shared by the unit tests and the acceptance run.

#include "pickdrop/navigation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

namespace oracles {

inline pickdrop::OccupancyGrid random_grid(std::mt19937_64& rng, int w, int h, double fill) {
  pickdrop::OccupancyGrid g = pickdrop::OccupancyGrid::empty(0.1, w, h);
  std::bernoulli_distribution occ(fill);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g.set(x, y, occ(rng));
  return g;
}

// Uniform-cost search in doubles that also carries the (straight, diagonal)
// step counts of the best label. Costs a + b*sqrt(2) are distinct for
// distinct integer pairs, so the pair is unique.
inline std::optional<std::pair<long, long>> ucs(const pickdrop::Costmap& cm, int sx, int sy, int gx, int gy) {
  const int w = cm.base.width, h = cm.base.height;
  std::vector<double> best(static_cast<std::size_t>(w) * h, 1e300);
  std::vector<std::pair<long, long>> steps(best.size());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  best[sy * w + sx] = 0.0;
  open.push({0.0, sy * w + sx});
  while (!open.empty()) {
    auto [d, i] = open.top();
    open.pop();
    if (d > best[i]) continue;
    const int x = i % w, y = i / w;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!cm.free(nx, ny)) continue;
        const bool diag = dx != 0 && dy != 0;
        if (diag && !(cm.free(x + dx, y) && cm.free(x, y + dy))) continue;
        const double nd = d + (diag ? std::sqrt(2.0) : 1.0);
        const int j = ny * w + nx;
        if (nd < best[j] - 1e-9) {
          best[j] = nd;
          steps[j] = {steps[i].first + (diag ? 0 : 1), steps[i].second + (diag ? 1 : 0)};
          open.push({nd, j});
        }
      }
  }
  if (best[gy * w + gx] >= 1e299) return std::nullopt;
  return steps[gy * w + gx];
}

// A straight wall ahead of the robot; each scan half reports the distance to
// the wall along a ray from a point beside the robot center.
inline pickdrop::ScanSource wall_scans(double distance, double tilt, double offset, double side = 0.45) {
  return [=](const pickdrop::World& world) {
    auto range = [&](double s) {
      const pickdrop::Vec2 origin = world.robot.to_world({0.0, s});
      const pickdrop::Vec2 dir(std::cos(world.robot.heading), std::sin(world.robot.heading));
      const pickdrop::Vec2 n(std::cos(tilt), std::sin(tilt));
      const double denom = n.dot(dir);
      const double t = (distance - n.dot(origin - pickdrop::Vec2(0.0, offset))) / (denom == 0.0 ? 1e-12 : denom);
      return t > 0.0 && t < 5.0 ? t : std::numeric_limits<double>::infinity();
    };
    pickdrop::LaserScan l, r;
    l.ranges = {range(side)};
    r.ranges = {range(-side)};
    return std::pair{l, r};
  };
}

}  // namespace oracles
