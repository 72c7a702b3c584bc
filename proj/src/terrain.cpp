#include "ecosim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ecosim {

namespace {

constexpr std::array<std::string_view, kLandCoverCount> kCoverNames = {
    "field", "forest", "rock", "sea", "road", "cultivated", "polluted_water", "logged"};

void expect_header_key(std::istream& in, std::string_view key, const std::string& path) {
  std::string word;
  if (!(in >> word) || word != key) {
    throw std::runtime_error(path + ": expected header key '" + std::string(key) + "'");
  }
}

struct RasterHeader {
  int ncols = 0;
  int nrows = 0;
  double cellsize = 1.0;
  double nodata = kNoDataAltitude;
};

RasterHeader read_header(std::istream& in, const std::string& path) {
  RasterHeader h;
  expect_header_key(in, "ncols", path);
  in >> h.ncols;
  expect_header_key(in, "nrows", path);
  in >> h.nrows;
  expect_header_key(in, "cellsize", path);
  in >> h.cellsize;
  expect_header_key(in, "nodata", path);
  in >> h.nodata;
  if (!in) throw std::runtime_error(path + ": malformed raster header");
  if (h.ncols <= 0 || h.nrows <= 0) throw std::runtime_error(path + ": non-positive raster dimensions");
  return h;
}

}  // namespace

LandCover land_cover_from_code(int code) {
  if (code < 0 || code >= kLandCoverCount) {
    throw std::runtime_error("unknown cover code " + std::to_string(code));
  }
  return static_cast<LandCover>(code);
}

std::string_view land_cover_name(LandCover cover) {
  return kCoverNames[static_cast<int>(cover)];
}

long TerrainGrid::walkable_count() const {
  long n = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (walkable(Cell{x, y})) ++n;
  return n;
}

TerrainGrid load_terrain(const std::string& altitude_path, const std::string& cover_path) {
  std::ifstream alt_in(altitude_path);
  if (!alt_in) throw std::runtime_error("cannot open altitude raster: " + altitude_path);
  std::ifstream cov_in(cover_path);
  if (!cov_in) throw std::runtime_error("cannot open cover raster: " + cover_path);

  const RasterHeader ah = read_header(alt_in, altitude_path);
  const RasterHeader ch = read_header(cov_in, cover_path);
  if (ah.ncols != ch.ncols || ah.nrows != ch.nrows) {
    std::ostringstream msg;
    msg << "dimension mismatch: altitude " << ah.ncols << "x" << ah.nrows << " vs cover "
        << ch.ncols << "x" << ch.nrows;
    throw std::runtime_error(msg.str());
  }
  if (ah.ncols < 31 || ah.nrows < 31) {
    throw std::runtime_error("grid smaller than 31x31: " + std::to_string(ah.ncols) + "x" +
                             std::to_string(ah.nrows));
  }

  TerrainGrid grid;
  grid.width = ah.ncols;
  grid.height = ah.nrows;
  grid.cell_size = ah.cellsize;
  grid.nodata = ah.nodata;
  grid.altitude.resize(grid.height, grid.width);
  grid.cover.resize(grid.height, grid.width);

  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      double v;
      if (!(alt_in >> v)) {
        std::ostringstream msg;
        msg << altitude_path << ": non-numeric or missing altitude at cell (" << x << "," << y << ")";
        throw std::runtime_error(msg.str());
      }
      grid.altitude(y, x) = (v == ah.nodata) ? kNoDataAltitude : v;
    }
  }
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      int code;
      if (!(cov_in >> code)) {
        std::ostringstream msg;
        msg << cover_path << ": non-numeric or missing cover code at cell (" << x << "," << y << ")";
        throw std::runtime_error(msg.str());
      }
      grid.cover(y, x) = static_cast<std::uint8_t>(static_cast<int>(land_cover_from_code(code)));
    }
  }
  grid.refresh_min_altitude();
  return grid;
}

void save_terrain(const TerrainGrid& grid, const std::string& altitude_path,
                  const std::string& cover_path) {
  std::ofstream alt_out(altitude_path);
  if (!alt_out) throw std::runtime_error("cannot write altitude raster: " + altitude_path);
  std::ofstream cov_out(cover_path);
  if (!cov_out) throw std::runtime_error("cannot write cover raster: " + cover_path);

  auto header = [&](std::ofstream& out) {
    out << "ncols " << grid.width << "\n"
        << "nrows " << grid.height << "\n"
        << "cellsize " << grid.cell_size << "\n"
        << "nodata " << grid.nodata << "\n";
  };
  header(alt_out);
  header(cov_out);

  char buf[40];
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      std::snprintf(buf, sizeof(buf), "%.17g", grid.altitude(y, x));
      alt_out << buf << (x + 1 == grid.width ? "" : " ");
      cov_out << static_cast<int>(grid.cover(y, x)) << (x + 1 == grid.width ? "" : " ");
    }
    alt_out << "\n";
    cov_out << "\n";
  }
}

namespace {

/// Two-octave value noise in [0,1] on a seeded lattice, bilinear with
/// smoothstep easing.
class ValueNoise {
 public:
  ValueNoise(int size, double spacing, std::uint64_t seed) : spacing_(spacing) {
    n_ = static_cast<int>(std::ceil(size / spacing)) + 2;
    Rng rng(seed);
    lattice_.resize(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) lattice_(j, i) = rng.uniform();
  }

  double at(double x, double y) const {
    const double gx = x / spacing_;
    const double gy = y / spacing_;
    const int ix = std::min(static_cast<int>(gx), n_ - 2);
    const int iy = std::min(static_cast<int>(gy), n_ - 2);
    const double fx = smooth(gx - ix);
    const double fy = smooth(gy - iy);
    const double a = lattice_(iy, ix) * (1 - fx) + lattice_(iy, ix + 1) * fx;
    const double b = lattice_(iy + 1, ix) * (1 - fx) + lattice_(iy + 1, ix + 1) * fx;
    return a * (1 - fy) + b * fy;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }

  int n_;
  double spacing_;
  Matrix lattice_;
};

}  // namespace

TerrainGrid generate_island(int size, std::uint64_t seed, const IslandParams& params) {
  if (size < 31) throw std::runtime_error("island size must be at least 31, got " + std::to_string(size));

  TerrainGrid grid;
  grid.width = size;
  grid.height = size;
  grid.altitude.resize(size, size);
  grid.cover.resize(size, size);

  const ValueNoise coarse(size, std::max(4.0, size / 6.0), derive_seed(seed, "noise-coarse"));
  const ValueNoise fine(size, std::max(2.0, size / 14.0), derive_seed(seed, "noise-fine"));
  const ValueNoise cover_noise(size, std::max(3.0, size / 8.0), derive_seed(seed, "noise-cover"));

  const double half = size / 2.0;
  const double cx = (size - 1) / 2.0;
  const double cy = cx;
  const bool flat = params.max_altitude == 0.0;

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d = std::max(std::abs(x - cx), std::abs(y - cy)) / half;
      const double base = (params.land_fraction - d) / params.land_fraction;
      const bool border = x == 0 || y == 0 || x == size - 1 || y == size - 1;
      const bool land = base >= 0.0 && !border;

      double alt;
      if (flat) {
        alt = land ? 0.0 : -1.0;
      } else if (land) {
        const double n = 0.65 * coarse.at(x, y) + 0.35 * fine.at(x, y);
        alt = params.max_altitude * base * (1.0 - params.roughness + params.roughness * n);
      } else {
        alt = std::min(-0.2, 5.0 * std::min(base, 0.0) - 0.2);
      }
      grid.altitude(y, x) = alt;

      LandCover cover;
      if (!land) {
        cover = LandCover::sea;
      } else if (flat) {
        cover = LandCover::field;
      } else {
        const double m = cover_noise.at(x, y);
        if (m < params.forest_fraction) {
          cover = LandCover::forest;
        } else if (m > 1.0 - params.rock_fraction) {
          cover = LandCover::rock;
        } else {
          cover = LandCover::field;
        }
      }
      grid.cover(y, x) = static_cast<std::uint8_t>(static_cast<int>(cover));
    }
  }

  if (!flat) {
    // Rescale so no step between adjacent land cells exceeds the slope cap.
    double max_grad = 0.0;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (grid.stored_cover(Cell{x, y}) == LandCover::sea) continue;
        for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {1, 1}, {1, -1}}) {
          const Cell nb{x + dx, y + dy};
          if (!grid.in_bounds(nb) || grid.stored_cover(nb) == LandCover::sea) continue;
          const double dist = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
          max_grad = std::max(max_grad, std::abs(grid.altitude(nb.y, nb.x) - grid.altitude(y, x)) / dist);
        }
      }
    }
    const double cap = std::tan(deg_to_rad(params.max_slope_deg));
    if (max_grad > cap && max_grad > 0.0) {
      grid.altitude *= cap / max_grad;
    }
  }

  grid.refresh_min_altitude();
  return grid;
}

double slope_degrees(const TerrainGrid& grid, Cell from, Cell to) {
  if (!cells_adjacent(from, to)) {
    std::ostringstream msg;
    msg << "cells (" << from.x << "," << from.y << ") and (" << to.x << "," << to.y
        << ") are not adjacent";
    throw std::runtime_error(msg.str());
  }
  const double rise = grid.altitude_at(to) - grid.altitude_at(from);
  const double run =
      std::hypot(static_cast<double>(to.x - from.x), static_cast<double>(to.y - from.y)) *
      grid.cell_size;
  return rad_to_deg(std::atan(rise / run));
}

TerrainGrid set_sea_level(TerrainGrid grid, double level) {
  grid.sea_level = level;
  return grid;
}

Region Region::rectangle(Cell a, Cell b) {
  Region r;
  r.is_rect_ = true;
  r.lo_ = Cell{std::min(a.x, b.x), std::min(a.y, b.y)};
  r.hi_ = Cell{std::max(a.x, b.x), std::max(a.y, b.y)};
  return r;
}

Region Region::polyline(std::vector<Vector2> points, double width) {
  if (points.size() < 2) throw std::runtime_error("polyline region needs at least two points");
  if (width <= 0) throw std::runtime_error("polyline width must be positive");
  Region r;
  r.is_rect_ = false;
  r.points_ = std::move(points);
  r.width_ = width;
  return r;
}

namespace {

double point_segment_distance(const Vector2& p, const Vector2& a, const Vector2& b) {
  const Vector2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

std::vector<Cell> Region::cells(const TerrainGrid& grid) const {
  std::vector<Cell> out;
  if (is_rect_) {
    for (int y = std::max(0, lo_.y); y <= std::min(grid.height - 1, hi_.y); ++y)
      for (int x = std::max(0, lo_.x); x <= std::min(grid.width - 1, hi_.x); ++x)
        out.push_back(Cell{x, y});
    return out;
  }
  const double r = width_ / 2.0;
  GridOf<std::uint8_t> hit = GridOf<std::uint8_t>::Zero(grid.height, grid.width);
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vector2& a = points_[i];
    const Vector2& b = points_[i + 1];
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - r)) - 1);
    const int x1 = std::min(grid.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + r)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - r)) - 1);
    const int y1 = std::min(grid.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + r)) + 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (!hit(y, x) && point_segment_distance(cell_center(Cell{x, y}), a, b) <= r) hit(y, x) = 1;
  }
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      if (hit(y, x)) out.push_back(Cell{x, y});
  return out;
}

TerrainGrid set_land_cover(TerrainGrid grid, const Region& region, LandCover cover) {
  const auto cells = region.cells(grid);
  if (cells.empty()) throw std::runtime_error("land cover region does not intersect the grid");
  for (Cell c : cells) grid.cover(c.y, c.x) = static_cast<std::uint8_t>(static_cast<int>(cover));
  return grid;
}

std::string_view veg_species_name(VegSpecies s) {
  switch (s) {
    case VegSpecies::grass: return "grass";
    case VegSpecies::dandelion: return "dandelion";
    case VegSpecies::tree: return "tree";
  }
  return "?";
}

VegSpecies veg_species_from_name(std::string_view name) {
  for (int i = 0; i < kVegSpeciesCount; ++i) {
    const auto s = static_cast<VegSpecies>(i);
    if (veg_species_name(s) == name) return s;
  }
  throw std::runtime_error("unknown vegetation species: " + std::string(name));
}

DensityTable DensityTable::defaults() {
  DensityTable t;
  t.at(VegSpecies::grass, LandCover::field) = 1.0;
  t.at(VegSpecies::grass, LandCover::forest) = 0.3;
  t.at(VegSpecies::grass, LandCover::logged) = 0.5;
  t.at(VegSpecies::dandelion, LandCover::field) = 1.0;
  t.at(VegSpecies::dandelion, LandCover::forest) = 0.35;
  t.at(VegSpecies::dandelion, LandCover::logged) = 0.4;
  t.at(VegSpecies::tree, LandCover::forest) = 1.0;
  t.at(VegSpecies::tree, LandCover::field) = 0.02;
  return t;
}

bool vegetation_allowed(const TerrainGrid& grid, const DensityTable& table, VegSpecies s, Cell c) {
  if (!grid.in_bounds(c)) return false;
  const LandCover cover = grid.cover_at(c);
  if (is_water(cover) || cover == LandCover::rock || cover == LandCover::road) return false;
  return table.at(s, cover) > 0.0;
}

std::vector<VegetationPlacement> place_vegetation(const TerrainGrid& grid,
                                                  const DensityTable& table,
                                                  const std::map<VegSpecies, int>& counts,
                                                  std::uint64_t seed) {
  for (const auto& [species, count] : counts) {
    if (count < 0) throw std::runtime_error("negative vegetation count");
  }

  std::vector<VegetationPlacement> placements;
  GridOf<std::uint8_t> tree_taken = GridOf<std::uint8_t>::Zero(grid.height, grid.width);

  // Trees first so their cells can exclude the ground plants.
  const std::array<VegSpecies, 3> order = {VegSpecies::tree, VegSpecies::grass,
                                           VegSpecies::dandelion};
  for (VegSpecies species : order) {
    const auto it = counts.find(species);
    if (it == counts.end() || it->second == 0) continue;
    const int want = it->second;

    Rng rng(derive_seed(seed, veg_species_name(species)));
    // Weighted sampling without replacement: keep the `want` smallest
    // -log(u)/w keys (Efraimidis-Spirakis).
    std::vector<std::pair<double, Cell>> keyed;
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        const Cell c{x, y};
        const double u = rng.uniform_pos();  // one draw per cell keeps streams aligned
        if (!vegetation_allowed(grid, table, species, c)) continue;
        if (species != VegSpecies::tree && tree_taken(y, x)) continue;
        const double w = table.at(species, grid.cover_at(c));
        keyed.emplace_back(-std::log(u) / w, c);
      }
    }
    if (want > static_cast<int>(keyed.size())) {
      std::ostringstream msg;
      msg << "requested " << want << " " << veg_species_name(species) << " placements but only "
          << keyed.size() << " eligible cells";
      throw std::runtime_error(msg.str());
    }
    std::partial_sort(keyed.begin(), keyed.begin() + want, keyed.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return std::pair(a.second.y, a.second.x) < std::pair(b.second.y, b.second.x);
                      });
    for (int i = 0; i < want; ++i) {
      const Cell c = keyed[i].second;
      placements.push_back(VegetationPlacement{species, c});
      if (species == VegSpecies::tree) tree_taken(c.y, c.x) = 1;
    }
  }
  return placements;
}

void save_vegetation_csv(const std::vector<VegetationPlacement>& placements,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vegetation csv: " + path);
  out << "species,x,y\n";
  for (const auto& p : placements) {
    out << veg_species_name(p.species) << ',' << p.cell.x << ',' << p.cell.y << '\n';
  }
}

std::vector<VegetationPlacement> load_vegetation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vegetation csv: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "species,x,y") {
    throw std::runtime_error(path + ": missing vegetation csv header");
  }
  std::vector<VegetationPlacement> placements;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string species, xs, ys;
    if (!std::getline(row, species, ',') || !std::getline(row, xs, ',') || !std::getline(row, ys)) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    placements.push_back(
        VegetationPlacement{veg_species_from_name(species), Cell{std::stoi(xs), std::stoi(ys)}});
  }
  return placements;
}

}  // namespace ecosim
