#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>

namespace ecosim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;

template <typename T>
using GridOf = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer cell index into a raster. x grows east, y grows south, so row 0
/// of a grid is its north edge and north is the -y direction.
struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

inline Cell cell_of(const Vector2& position) {
  return Cell{static_cast<int>(std::floor(position.x())),
              static_cast<int>(std::floor(position.y()))};
}

inline Vector2 cell_center(Cell c) { return Vector2(c.x + 0.5, c.y + 0.5); }

inline bool cells_adjacent(Cell a, Cell b) {
  const int dx = std::abs(a.x - b.x);
  const int dy = std::abs(a.y - b.y);
  return (dx != 0 || dy != 0) && dx <= 1 && dy <= 1;
}

struct CellHash {
  std::size_t operator()(const Cell& c) const noexcept {
    const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
                     static_cast<std::uint32_t>(c.y);
    return std::hash<std::uint64_t>()(key);
  }
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace ecosim
