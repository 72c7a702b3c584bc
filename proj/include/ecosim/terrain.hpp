#pragma once

#include "ecosim/rng.hpp"
#include "ecosim/types.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ecosim {

enum class LandCover : std::uint8_t {
  field = 0,
  forest = 1,
  rock = 2,
  sea = 3,
  road = 4,
  cultivated = 5,
  polluted_water = 6,
  logged = 7,
};

inline constexpr int kLandCoverCount = 8;

LandCover land_cover_from_code(int code);
std::string_view land_cover_name(LandCover cover);

inline bool is_water(LandCover c) {
  return c == LandCover::sea || c == LandCover::polluted_water;
}

/// Altitude cells equal to the file's nodata marker load as this value, deep
/// enough to stay submerged under any plausible sea level.
inline constexpr double kNoDataAltitude = -10000.0;

/// The raster world: per-cell altitude (meters) and land cover at 1 m
/// resolution plus a scalar sea level. A cell is submerged iff its altitude
/// is below sea level; submerged cells report cover `sea` while keeping their
/// stored cover, so flooding is reversible.
///
/// Immutable after construction except through the explicit edit operations,
/// which take the grid by value and return the edited copy.
struct TerrainGrid {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;
  double sea_level = 0.0;
  double nodata = kNoDataAltitude;
  Matrix altitude;             // (height x width), row = y
  GridOf<std::uint8_t> cover;  // stored cover codes, same layout
  double min_altitude = 0.0;   // cached for perception padding

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool in_bounds(Cell c) const { return in_bounds(c.x, c.y); }

  double altitude_at(Cell c) const { return altitude(c.y, c.x); }
  LandCover stored_cover(Cell c) const { return static_cast<LandCover>(cover(c.y, c.x)); }
  bool submerged(Cell c) const { return altitude_at(c) < sea_level; }

  /// Effective cover: `sea` when submerged, the stored cover otherwise.
  LandCover cover_at(Cell c) const {
    return submerged(c) ? LandCover::sea : stored_cover(c);
  }

  /// A cell an animal may stand on: in bounds and not water.
  bool walkable(Cell c) const { return in_bounds(c) && !is_water(cover_at(c)); }

  long walkable_count() const;

  void refresh_min_altitude() { min_altitude = altitude.size() > 0 ? altitude.minCoeff() : 0.0; }

  bool operator==(const TerrainGrid&) const = default;
};

TerrainGrid load_terrain(const std::string& altitude_path, const std::string& cover_path);
void save_terrain(const TerrainGrid& grid, const std::string& altitude_path,
                  const std::string& cover_path);

/// Knobs for the synthetic island generator. The island is a squarish land
/// mass surrounded by sea; altitude is a radial base shaped by seeded value
/// noise, rescaled so no walkable step exceeds max_slope_deg.
struct IslandParams {
  double max_altitude = 8.0;    // 0 keeps every land cell at altitude 0
  double roughness = 0.5;       // noise blend in [0,1]
  double land_fraction = 0.78;  // shoreline radius as a fraction of the half-size
  double forest_fraction = 0.3;
  double rock_fraction = 0.06;
  double max_slope_deg = 40.0;

  static IslandParams flat() {
    IslandParams p;
    p.max_altitude = 0.0;
    p.roughness = 0.0;
    p.forest_fraction = 0.0;
    p.rock_fraction = 0.0;
    return p;
  }

  bool operator==(const IslandParams&) const = default;
};

TerrainGrid generate_island(int size, std::uint64_t seed, const IslandParams& params = {});

/// Signed slope in degrees from one cell to an 8-adjacent cell, positive
/// uphill, using the distance between cell centers.
double slope_degrees(const TerrainGrid& grid, Cell from, Cell to);

TerrainGrid set_sea_level(TerrainGrid grid, double level);

/// A rectangle or a rasterized thick polyline over grid cells.
class Region {
 public:
  static Region rectangle(Cell a, Cell b);
  static Region polyline(std::vector<Vector2> points, double width);

  /// Cells of the region clipped to the grid, deduplicated, in row-major order.
  std::vector<Cell> cells(const TerrainGrid& grid) const;

 private:
  bool is_rect_ = true;
  Cell lo_{}, hi_{};
  std::vector<Vector2> points_;
  double width_ = 1.0;
};

TerrainGrid set_land_cover(TerrainGrid grid, const Region& region, LandCover cover);

enum class VegSpecies : std::uint8_t { grass = 0, dandelion = 1, tree = 2 };
inline constexpr int kVegSpeciesCount = 3;

std::string_view veg_species_name(VegSpecies s);
VegSpecies veg_species_from_name(std::string_view name);

struct VegetationPlacement {
  VegSpecies species;
  Cell cell;
  bool operator==(const VegetationPlacement&) const = default;
};

/// Per-cover placement weight for each vegetation species. Zero weight makes
/// a cover ineligible for that species.
struct DensityTable {
  std::array<std::array<double, kLandCoverCount>, kVegSpeciesCount> weight{};

  double at(VegSpecies s, LandCover c) const {
    return weight[static_cast<int>(s)][static_cast<int>(c)];
  }
  double& at(VegSpecies s, LandCover c) {
    return weight[static_cast<int>(s)][static_cast<int>(c)];
  }

  static DensityTable defaults();
};

/// True when the cell may hold vegetation of species s: eligible cover with
/// positive weight, never water, rock, or road.
bool vegetation_allowed(const TerrainGrid& grid, const DensityTable& table, VegSpecies s, Cell c);

/// Weighted sampling without replacement per species; trees are placed first
/// and exclude grass and dandelions from their cells. Deterministic per seed.
std::vector<VegetationPlacement> place_vegetation(const TerrainGrid& grid,
                                                  const DensityTable& table,
                                                  const std::map<VegSpecies, int>& counts,
                                                  std::uint64_t seed);

void save_vegetation_csv(const std::vector<VegetationPlacement>& placements,
                         const std::string& path);
std::vector<VegetationPlacement> load_vegetation_csv(const std::string& path);

}  // namespace ecosim
