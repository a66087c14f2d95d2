#pragma once

#include "pickdrop/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace pickdrop::detail {

// Uniform voxel bucketing for neighbor queries over a fixed point set.
class SpatialHash {
 public:
  SpatialHash(const std::vector<Vec3>& points, double cell)
      : points_(points), cell_(cell) {
    buckets_.reserve(points.size() / 4 + 1);
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(points[i])].push_back(i);
  }

  // Calls fn(index) for every point within `radius` of `center`.
  template <typename Fn>
  void for_each_within(const Vec3& center, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const int span = static_cast<int>(std::ceil(radius / cell_));
    const auto [cx, cy, cz] = coords(center);
    for (int dx = -span; dx <= span; ++dx)
      for (int dy = -span; dy <= span; ++dy)
        for (int dz = -span; dz <= span; ++dz) {
          auto it = buckets_.find(pack(cx + dx, cy + dy, cz + dz));
          if (it == buckets_.end()) continue;
          for (std::size_t i : it->second)
            if ((points_[i] - center).squaredNorm() <= r2) fn(i);
        }
  }

 private:
  struct Coords {
    std::int64_t x, y, z;
  };
  Coords coords(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::int64_t bias = 1 << 20;
    return (static_cast<std::uint64_t>(x + bias) << 42) ^
           (static_cast<std::uint64_t>(y + bias) << 21) ^ static_cast<std::uint64_t>(z + bias);
  }
  std::uint64_t key(const Vec3& p) const {
    const auto c = coords(p);
    return pack(c.x, c.y, c.z);
  }

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace pickdrop::detail
