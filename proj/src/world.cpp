#include "ecosim/world.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ecosim {

namespace {

constexpr int kOrientations = 24;  // multiples of 15 degrees

/// Unit displacement per orientation; 0 deg faces north (-y), 90 deg east.
const std::array<Vector2, kOrientations>& direction_table() {
  static const auto table = [] {
    std::array<Vector2, kOrientations> t;
    for (int k = 0; k < kOrientations; ++k) {
      const double rad = deg_to_rad(15.0 * k);
      double dx = std::sin(rad);
      double dy = -std::cos(rad);
      if (std::abs(dx) < 1e-15) dx = 0.0;
      if (std::abs(dy) < 1e-15) dy = 0.0;
      t[static_cast<std::size_t>(k)] = Vector2(dx, dy);
    }
    return t;
  }();
  return table;
}

constexpr double kMaxInclineDeg = 45.0;

const std::array<Cell, 8>& neighbor_offsets() {
  static const std::array<Cell, 8> offs = {Cell{0, -1}, Cell{1, -1}, Cell{1, 0}, Cell{1, 1},
                                           Cell{0, 1},  Cell{-1, 1}, Cell{-1, 0}, Cell{-1, -1}};
  return offs;
}

}  // namespace

std::string_view death_cause_name(DeathCause cause) {
  switch (cause) {
    case DeathCause::drowned: return "drowned";
    case DeathCause::predated: return "predated";
    case DeathCause::starved: return "starved";
    case DeathCause::dehydrated: return "dehydrated";
    case DeathCause::old_age: return "old_age";
    case DeathCause::road_kill: return "road_kill";
    case DeathCause::hunted: return "hunted";
  }
  return "?";
}

std::string_view event_type_name(EventType type) {
  switch (type) {
    case EventType::death: return "death";
    case EventType::birth: return "birth";
    case EventType::conception: return "conception";
    case EventType::eat_plant: return "eat_plant";
    case EventType::predation_start: return "predation_start";
    case EventType::predation_complete: return "predation_complete";
    case EventType::collision: return "collision";
    case EventType::plant_removed: return "plant_removed";
    case EventType::introduced: return "introduced";
    case EventType::extinction: return "extinction";
    case EventType::intervention: return "intervention";
  }
  return "?";
}

void SpeciesParams::validate() const {
  if (name.empty()) throw std::runtime_error("species name must not be empty");
  if (!(resource_max > 0)) throw std::runtime_error(name + ": resource_max must be positive");
  if (!(reproduction_threshold > 0 && reproduction_threshold < resource_max))
    throw std::runtime_error(name + ": reproduction_threshold must lie in (0, resource_max)");
  if (reproduction_rate < 0 || reproduction_rate > 1)
    throw std::runtime_error(name + ": reproduction_rate must lie in [0,1]");
  if (predation_yield < 0 || predation_yield > 1)
    throw std::runtime_error(name + ": predation_yield must lie in [0,1]");
  if (basic_metabolic_cost < 0 || max_uphill_cost < 0 || collision_loss < 0)
    throw std::runtime_error(name + ": costs must be non-negative");
  if (maturity_age < 0 || max_age <= 0 || gestation_time < 0 || newborn_still_time < 0 ||
      eat_duration < 0)
    throw std::runtime_error(name + ": timing parameters must be non-negative");
}

SpeciesParams hare_params() {
  SpeciesParams p;
  p.name = "hare";
  p.resource_max = 5.0;
  p.reproduction_threshold = 3.5;
  p.reproduction_rate = 0.01;
  p.max_age = 10000;
  p.eat_duration = 1;
  p.diet = {"grass", "dandelion"};
  return p;
}

SpeciesParams fox_params() {
  SpeciesParams p;
  p.name = "fox";
  p.resource_max = 8.0;
  p.reproduction_threshold = 5.5;
  p.reproduction_rate = 0.006;
  p.max_age = 15000;
  p.eat_duration = 50;
  p.predation_yield = 0.75;
  p.diet = {"hare"};
  return p;
}

double utility(const AnimalState& animal) {
  if (!animal.alive) return 0.0;
  return utility(animal.glucose, animal.hydration);
}

WorldConfig::WorldConfig() { species = {hare_params(), fox_params()}; }

int WorldConfig::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i].name == name) return static_cast<int>(i);
  return -1;
}

World::World(TerrainGrid grid_in, const std::vector<VegetationPlacement>& vegetation,
             WorldConfig config_in, std::uint64_t seed)
    : grid(std::move(grid_in)), config(std::move(config_in)), rng(derive_seed(seed, "world")) {
  for (const auto& sp : config.species) sp.validate();
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  trees.assign(cells, 0);
  polluted.assign(cells, 0);
  fertility_multiplier.assign(config.species.size(), 1.0);
  cell_animals_.assign(cells, {});
  plant_cell_[0].assign(cells, -1);
  plant_cell_[1].assign(cells, -1);
  derive_diets();

  for (const auto& veg : vegetation) {
    if (!grid.in_bounds(veg.cell)) throw std::runtime_error("vegetation placement out of bounds");
    if (veg.species == VegSpecies::tree) {
      trees[cell_index(veg.cell)] = 1;
    } else {
      add_plant(PlantState{veg.species, veg.cell, true, 0, false});
    }
  }
}

void World::derive_diets() {
  const std::size_t n = config.species.size();
  predator_.assign(n, 0);
  eats_veg_.assign(n, {0, 0});
  prey_of_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& item : config.species[i].diet) {
      if (item == "grass") {
        eats_veg_[i][0] = 1;
      } else if (item == "dandelion") {
        eats_veg_[i][1] = 1;
      } else {
        const int j = config.species_index(item);
        if (j < 0) throw std::runtime_error("diet of " + config.species[i].name +
                                            " names unknown species: " + item);
        prey_of_[i].push_back(j);
      }
    }
    predator_[i] = prey_of_[i].empty() ? 0 : 1;
  }
}

int World::add_species(SpeciesParams params) {
  params.validate();
  config.species.push_back(std::move(params));
  fertility_multiplier.push_back(1.0);
  derive_diets();
  return static_cast<int>(config.species.size()) - 1;
}

void World::index_add(int id, Cell c) { cell_animals_[cell_index(c)].push_back(id); }

void World::index_remove(int id, Cell c) {
  auto& bucket = cell_animals_[cell_index(c)];
  bucket.erase(std::remove(bucket.begin(), bucket.end(), id), bucket.end());
}

void World::add_plant(PlantState plant) {
  const int slot = static_cast<int>(plant.species);
  auto& index = plant_cell_[static_cast<std::size_t>(slot)];
  if (index[cell_index(plant.cell)] >= 0)
    throw std::runtime_error("duplicate plant placement in one cell");
  index[cell_index(plant.cell)] = static_cast<int>(plants.size());
  plants.push_back(std::move(plant));
}

int World::plant_index_at(VegSpecies s, Cell c) const {
  if (s == VegSpecies::tree || !grid.in_bounds(c)) return -1;
  return plant_cell_[static_cast<std::size_t>(s)][cell_index(c)];
}

const PlantState* World::plant_at(VegSpecies s, Cell c) const {
  const int idx = plant_index_at(s, c);
  return idx >= 0 ? &plants[static_cast<std::size_t>(idx)] : nullptr;
}

AnimalState& World::spawn_animal(int species, Cell cell, std::optional<int> orientation_deg) {
  if (species < 0 || species >= static_cast<int>(config.species.size()))
    throw std::runtime_error("spawn_animal: unknown species index");
  if (!cell_free(cell)) throw std::runtime_error("spawn_animal: cell is not free");
  const auto& sp = config.species[static_cast<std::size_t>(species)];
  AnimalState a;
  a.id = static_cast<int>(animals.size());
  a.species = species;
  a.position = cell_center(cell);
  a.orientation_deg = orientation_deg.value_or(rng.uniform_int(kOrientations) * 15);
  a.glucose = std::min(sp.initial_resources, sp.resource_max);
  a.hydration = a.glucose;
  a.utility_prev = utility(a.glucose, a.hydration);
  animals.push_back(std::move(a));
  index_add(animals.back().id, cell);
  return animals.back();
}

void World::kill(int id, DeathCause cause, long step, std::vector<Event>& events) {
  AnimalState& a = animals[static_cast<std::size_t>(id)];
  if (!a.alive) return;
  a.alive = false;
  a.eating = false;
  a.history.clear();
  a.history.shrink_to_fit();
  index_remove(id, a.cell());
  events.push_back(Event{step, EventType::death, params_of(a).name, id,
                         std::string(death_cause_name(cause)), a.position.x(), a.position.y()});
}

std::vector<int> World::alive_ids() const {
  std::vector<int> ids;
  for (const auto& a : animals)
    if (a.alive) ids.push_back(a.id);
  return ids;
}

std::vector<int> World::actionable_ids() const {
  std::vector<int> ids;
  for (const auto& a : animals)
    if (a.alive && !a.locked()) ids.push_back(a.id);
  return ids;
}

int World::population(int species) const {
  int n = 0;
  for (const auto& a : animals)
    if (a.alive && a.species == species) ++n;
  return n;
}

int World::plant_population(VegSpecies s) const {
  int n = 0;
  for (const auto& p : plants)
    if (!p.removed && p.species == s) ++n;
  return n;
}

void World::check_spatial_index() const {
  for (const auto& a : animals) {
    if (!a.alive) continue;
    const auto& bucket = cell_animals_[cell_index(a.cell())];
    if (std::find(bucket.begin(), bucket.end(), a.id) == bucket.end())
      throw std::runtime_error("spatial index out of sync for animal " + std::to_string(a.id));
  }
}

Cell World::clamp_to_grid(Cell c) const {
  return Cell{std::clamp(c.x, 0, grid.width - 1), std::clamp(c.y, 0, grid.height - 1)};
}

std::optional<Cell> World::sample_weighted_plant_cell(VegSpecies s, Rng& r) {
  std::vector<std::pair<double, Cell>> cumulative;
  double total = 0.0;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const Cell c{x, y};
      if (!vegetation_allowed(grid, config.density, s, c)) continue;
      if (has_tree(c) || plant_index_at(s, c) >= 0) continue;
      total += config.density.at(s, grid.cover_at(c));
      cumulative.emplace_back(total, c);
    }
  }
  if (cumulative.empty()) return std::nullopt;
  const double u = r.uniform() * total;
  const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u,
                                   [](const auto& entry, double v) { return entry.first <= v; });
  return (it != cumulative.end() ? it : std::prev(cumulative.end()))->second;
}

std::optional<Cell> World::sample_uniform_plant_cell(VegSpecies s, Rng& r) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Cell c{r.uniform_int(grid.width), r.uniform_int(grid.height)};
    if (!vegetation_allowed(grid, config.density, s, c)) continue;
    if (has_tree(c) || plant_index_at(s, c) >= 0) continue;
    return c;
  }
  return std::nullopt;
}

StepResult World::step_world(const std::map<int, Action>& actions) {
  StepResult result;
  const int n_start = static_cast<int>(animals.size());
  const int species_count = static_cast<int>(config.species.size());

  // Action map must cover exactly the alive, unlocked animals.
  for (const auto& [id, action] : actions) {
    (void)action;
    if (id < 0 || id >= n_start)
      throw std::invalid_argument("action for unknown id " + std::to_string(id));
    const AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive) throw std::invalid_argument("action for dead id " + std::to_string(id));
    if (a.locked())
      throw std::invalid_argument("action for still-locked id " + std::to_string(id));
  }
  std::vector<std::uint8_t> start_alive(static_cast<std::size_t>(n_start), 0);
  for (int id = 0; id < n_start; ++id) {
    const AnimalState& a = animals[static_cast<std::size_t>(id)];
    start_alive[static_cast<std::size_t>(id)] = a.alive ? 1 : 0;
    if (a.alive && !a.locked() && actions.find(id) == actions.end())
      throw std::invalid_argument("missing action for animal " + std::to_string(id));
  }

  std::vector<double> move_slope(static_cast<std::size_t>(n_start), 0.0);
  std::vector<std::uint8_t> entered_sea(static_cast<std::size_t>(n_start), 0);

  // Phase 1: movement and turning.
  for (int id = 0; id < n_start; ++id) {
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive) continue;

    a.history.insert(a.history.begin(), a.position);
    if (static_cast<int>(a.history.size()) > config.history_length)
      a.history.resize(static_cast<std::size_t>(config.history_length));

    const Action action = a.locked() ? Action::stand_still : actions.at(id);
    switch (action) {
      case Action::stand_still:
        break;
      case Action::turn_left:
        a.orientation_deg = (a.orientation_deg + 360 - 15) % 360;
        break;
      case Action::turn_right:
        a.orientation_deg = (a.orientation_deg + 15) % 360;
        break;
      case Action::move_forward: {
        const Vector2 dir = direction_table()[static_cast<std::size_t>(a.orientation_deg / 15)];
        const Vector2 new_pos = a.position + dir;
        const Cell from = a.cell();
        const Cell to = cell_of(new_pos);
        if (to == from) {
          a.position = new_pos;
          break;
        }
        if (!grid.in_bounds(to)) {
          // Off-grid is open sea; the move is fatal and the position stays
          // on the last in-grid cell for bookkeeping.
          entered_sea[static_cast<std::size_t>(id)] = 1;
          break;
        }
        if (grid.cover_at(to) == LandCover::sea) {
          index_remove(id, from);
          a.position = new_pos;
          index_add(id, to);
          entered_sea[static_cast<std::size_t>(id)] = 1;
          break;
        }
        if (grid.cover_at(to) == LandCover::polluted_water) break;
        const double slope = slope_degrees(grid, from, to);
        if (std::abs(slope) > kMaxInclineDeg) break;
        if (has_tree(to)) {
          const auto& sp = params_of(a);
          a.glucose = std::max(0.0, a.glucose - sp.collision_loss);
          a.hydration = std::max(0.0, a.hydration - sp.collision_loss);
          result.events.push_back(Event{clock, EventType::collision, sp.name, id, "tree",
                                        a.position.x(), a.position.y()});
          break;
        }
        index_remove(id, from);
        a.position = new_pos;
        index_add(id, to);
        move_slope[static_cast<std::size_t>(id)] = slope;
        result.moves.push_back(MoveRecord{id, from, to});
        break;
      }
    }
  }

  // Phase 2: sea-entry deaths.
  for (int id = 0; id < n_start; ++id) {
    if (entered_sea[static_cast<std::size_t>(id)] && animals[static_cast<std::size_t>(id)].alive)
      kill(id, DeathCause::drowned, clock, result.events);
  }

  // Phase 3: eating. Voluntary stand-still only; a locked animal is busy.
  for (int id = 0; id < n_start; ++id) {
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive || a.locked()) continue;
    const auto it = actions.find(id);
    if (it == actions.end() || it->second != Action::stand_still) continue;
    const auto& sp = params_of(a);
    const Cell here = a.cell();

    if (eats_veg_[static_cast<std::size_t>(a.species)][0]) {
      const int pi = plant_index_at(VegSpecies::grass, here);
      if (pi >= 0 && plants[static_cast<std::size_t>(pi)].available &&
          !plants[static_cast<std::size_t>(pi)].removed) {
        PlantState& plant = plants[static_cast<std::size_t>(pi)];
        const double gain = std::min(1.0, sp.resource_max - a.glucose);
        a.glucose = std::min(sp.resource_max, a.glucose + 1.0);
        plant.available = false;
        plant.regrow_remaining = config.plant_params[0].regrow_delay;
        result.events.push_back(Event{clock, EventType::eat_plant, sp.name, id, "grass",
                                      a.position.x(), a.position.y(), gain});
      }
    }
    if (eats_veg_[static_cast<std::size_t>(a.species)][1]) {
      const int pi = plant_index_at(VegSpecies::dandelion, here);
      if (pi >= 0 && plants[static_cast<std::size_t>(pi)].available &&
          !plants[static_cast<std::size_t>(pi)].removed) {
        PlantState& plant = plants[static_cast<std::size_t>(pi)];
        // Dandelions in a polluted region are consumed but yield nothing.
        const bool dirty = is_polluted(here);
        const double gain = dirty ? 0.0 : std::min(1.0, sp.resource_max - a.hydration);
        if (!dirty) a.hydration = std::min(sp.resource_max, a.hydration + 1.0);
        plant.available = false;
        plant.regrow_remaining = config.plant_params[1].regrow_delay;
        result.events.push_back(Event{clock, EventType::eat_plant, sp.name, id, "dandelion",
                                      a.position.x(), a.position.y(), gain});
      }
    }
    if (!prey_of_[static_cast<std::size_t>(a.species)].empty() && !a.eating) {
      int prey_id = -1;
      for (int other : animals_at(here)) {
        if (other == id) continue;
        const AnimalState& o = animals[static_cast<std::size_t>(other)];
        if (!o.alive) continue;
        const auto& prey_list = prey_of_[static_cast<std::size_t>(a.species)];
        if (std::find(prey_list.begin(), prey_list.end(), o.species) == prey_list.end()) continue;
        if (prey_id < 0 || other < prey_id) prey_id = other;
      }
      if (prey_id >= 0) {
        AnimalState& prey = animals[static_cast<std::size_t>(prey_id)];
        const double prey_glucose = prey.glucose;
        const double prey_hydration = prey.hydration;
        kill(prey_id, DeathCause::predated, clock, result.events);
        a.eating = true;
        a.still_remaining = std::max(1, sp.eat_duration);
        a.pending_gain_glucose = sp.predation_yield * prey_glucose;
        a.pending_gain_hydration = sp.predation_yield * prey_hydration;
        result.events.push_back(Event{clock, EventType::predation_start, sp.name, id,
                                      params_of(prey).name, a.position.x(), a.position.y(),
                                      prey_glucose, prey_hydration});
      }
    }
  }

  // Phase 4: metabolism and aging.
  for (int id = 0; id < n_start; ++id) {
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive) continue;
    const auto& sp = params_of(a);
    a.age += 1;
    const double uphill = std::max(0.0, move_slope[static_cast<std::size_t>(id)]) / kMaxInclineDeg;
    const double cost = sp.basic_metabolic_cost + sp.max_uphill_cost * uphill;
    a.glucose = std::max(0.0, a.glucose - cost);
    a.hydration = std::max(0.0, a.hydration - cost);
  }

  // Phase 5: starvation, dehydration, old age (in precedence order).
  for (int id = 0; id < n_start; ++id) {
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive) continue;
    if (a.glucose <= 0.0) {
      kill(id, DeathCause::starved, clock, result.events);
    } else if (a.hydration <= 0.0) {
      kill(id, DeathCause::dehydrated, clock, result.events);
    } else if (a.age >= params_of(a).max_age) {
      kill(id, DeathCause::old_age, clock, result.events);
    }
  }

  // Phase 6: lock countdown and predation completion.
  for (int id = 0; id < n_start; ++id) {
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (!a.alive || a.still_remaining <= 0) continue;
    a.still_remaining -= 1;
    if (a.still_remaining == 0 && a.eating) {
      const auto& sp = params_of(a);
      const double gain_g = a.pending_gain_glucose;
      const double gain_h = a.pending_gain_hydration;
      a.glucose = std::min(sp.resource_max, a.glucose + gain_g);
      a.hydration = std::min(sp.resource_max, a.hydration + gain_h);
      a.eating = false;
      a.pending_gain_glucose = 0.0;
      a.pending_gain_hydration = 0.0;
      result.events.push_back(Event{clock, EventType::predation_complete, sp.name, id, "",
                                    a.position.x(), a.position.y(), gain_g, gain_h, a.glucose,
                                    a.hydration});
    }
  }

  // Phase 7: reproduction (gestation countdown, births, conception).
  for (int id = 0; id < n_start; ++id) {
    {
      AnimalState& a = animals[static_cast<std::size_t>(id)];
      if (!a.alive) continue;
      if (a.gestation_remaining > 0) a.gestation_remaining -= 1;
    }
    if (animals[static_cast<std::size_t>(id)].gestation_remaining == 0) {
      std::vector<Cell> free_cells;
      const Cell here = animals[static_cast<std::size_t>(id)].cell();
      for (const Cell& off : neighbor_offsets()) {
        const Cell c{here.x + off.x, here.y + off.y};
        if (cell_free(c)) free_cells.push_back(c);
      }
      if (!free_cells.empty()) {
        const Cell birth_cell = free_cells[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(free_cells.size())))];
        const int species = animals[static_cast<std::size_t>(id)].species;
        const auto& sp = config.species[static_cast<std::size_t>(species)];
        AnimalState& child = spawn_animal(species, birth_cell);
        child.still_remaining = sp.newborn_still_time;
        AnimalState& parent = animals[static_cast<std::size_t>(id)];
        parent.glucose = std::max(0.0, parent.glucose - sp.initial_resources);
        parent.hydration = std::max(0.0, parent.hydration - sp.initial_resources);
        parent.gestation_remaining = -1;
        result.events.push_back(Event{clock, EventType::birth, sp.name, child.id,
                                      std::to_string(id), child.position.x(), child.position.y()});
      }
      // No free neighboring cell: birth stays due and retries next step.
    } else {
      AnimalState& a = animals[static_cast<std::size_t>(id)];
      const auto& sp = params_of(a);
      if (a.gestation_remaining == -1 && a.age >= sp.maturity_age) {
        const double lower = std::min(a.glucose, a.hydration);
        if (lower > sp.reproduction_threshold) {
          const double ramp = (lower - sp.reproduction_threshold) /
                              (sp.resource_max - sp.reproduction_threshold);
          const double p = std::clamp(
              fertility_multiplier[static_cast<std::size_t>(a.species)] * sp.reproduction_rate *
                  ramp,
              0.0, 1.0);
          if (rng.bernoulli(p)) {
            a.gestation_remaining = sp.gestation_time;
            result.events.push_back(Event{clock, EventType::conception, sp.name, id, "",
                                          a.position.x(), a.position.y()});
          }
        }
      }
    }
  }

  // Phase 8: plant regrowth and spreading.
  {
    std::array<int, 2> population = {plant_population(VegSpecies::grass),
                                     plant_population(VegSpecies::dandelion)};
    const std::size_t plant_count = plants.size();
    for (std::size_t idx = 0; idx < plant_count; ++idx) {
      PlantState& plant = plants[idx];
      if (plant.removed) continue;
      const int slot = static_cast<int>(plant.species);
      const PlantParams& pp = config.plant_params[static_cast<std::size_t>(slot)];
      if (!plant.available) {
        plant.regrow_remaining -= 1;
        if (plant.regrow_remaining <= 0) {
          if (pp.mode == PlantRegrowth::respawn_random) {
            if (auto fresh = sample_weighted_plant_cell(plant.species, rng)) {
              plant_cell_[static_cast<std::size_t>(slot)][cell_index(plant.cell)] = -1;
              plant_cell_[static_cast<std::size_t>(slot)][cell_index(*fresh)] =
                  static_cast<int>(idx);
              plant.cell = *fresh;
              plant.available = true;
              plant.regrow_remaining = 0;
            } else {
              plant.regrow_remaining = 1;  // retry next step
            }
          } else {
            plant.available = true;
            plant.regrow_remaining = 0;
          }
        }
      } else if ((pp.mode == PlantRegrowth::spread_roots || pp.mode == PlantRegrowth::spread_air) &&
                 pp.spread_probability > 0 &&
                 population[static_cast<std::size_t>(slot)] < pp.population_cap &&
                 rng.bernoulli(pp.spread_probability)) {
        std::optional<Cell> target;
        if (pp.mode == PlantRegrowth::spread_roots) {
          std::vector<Cell> candidates;
          for (const Cell& off : neighbor_offsets()) {
            const Cell c{plant.cell.x + off.x, plant.cell.y + off.y};
            if (vegetation_allowed(grid, config.density, plant.species, c) && !has_tree(c) &&
                plant_index_at(plant.species, c) < 0)
              candidates.push_back(c);
          }
          if (!candidates.empty())
            target = candidates[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(candidates.size())))];
        } else {
          target = sample_uniform_plant_cell(plant.species, rng);
        }
        if (target) {
          add_plant(PlantState{plant.species, *target, true, 0, false});
          population[static_cast<std::size_t>(slot)] += 1;
        }
      }
    }
  }

  // Phase 9: utility update and reward emission.
  for (int id = 0; id < n_start; ++id) {
    if (!start_alive[static_cast<std::size_t>(id)]) continue;
    AnimalState& a = animals[static_cast<std::size_t>(id)];
    if (a.alive) {
      const double u = utility(a.glucose, a.hydration);
      result.rewards[id] = u - a.utility_prev;
      a.utility_prev = u;
    } else {
      result.rewards[id] = config.death_utility - a.utility_prev;
    }
  }

  // Phase 10: clock.
  clock += 1;

  for (const Event& e : result.events) {
    if (e.type == EventType::death) result.deaths += 1;
    if (e.type == EventType::birth) result.births += 1;
  }
  (void)species_count;
  return result;
}

std::vector<Event> World::sync_vegetation() {
  std::vector<Event> events;
  for (std::size_t idx = 0; idx < plants.size(); ++idx) {
    PlantState& plant = plants[idx];
    if (plant.removed) continue;
    const LandCover cover = grid.cover_at(plant.cell);
    if (cover == LandCover::sea || cover == LandCover::rock || cover == LandCover::road) {
      plant.removed = true;
      plant.available = false;
      plant_cell_[static_cast<int>(plant.species)][cell_index(plant.cell)] = -1;
      events.push_back(Event{clock, EventType::plant_removed,
                             std::string(veg_species_name(plant.species)), static_cast<int>(idx),
                             std::string(land_cover_name(cover)), plant.cell.x + 0.5,
                             plant.cell.y + 0.5});
    }
  }
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const Cell c{x, y};
      if (!trees[cell_index(c)]) continue;
      const LandCover cover = grid.cover_at(c);
      if (cover == LandCover::sea || cover == LandCover::rock || cover == LandCover::road) {
        trees[cell_index(c)] = 0;
        events.push_back(Event{clock, EventType::plant_removed, "tree", -1,
                               std::string(land_cover_name(cover)), c.x + 0.5, c.y + 0.5});
      }
    }
  }
  return events;
}

void World::set_polluted(const Region& region) {
  for (const Cell c : region.cells(grid)) {
    polluted[cell_index(c)] = 1;
    if (grid.cover_at(c) == LandCover::sea) {
      grid.cover(c.y, c.x) = static_cast<std::uint8_t>(LandCover::polluted_water);
    }
  }
}

// --- checkpoint io ---------------------------------------------------------

namespace {

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("world checkpoint: missing ") + what);
  return std::strtod(tok.c_str(), nullptr);
}

}  // namespace

void save_world(const World& world, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write world checkpoint: " + path);
  out << "ECOSIM_WORLD 1\n";
  out << "clock " << world.clock << "\n";
  out << "rng " << world.rng.serialize() << "\n";
  const TerrainGrid& g = world.grid;
  out << "grid " << g.width << ' ' << g.height << ' ' << hex_double(g.cell_size) << ' '
      << hex_double(g.sea_level) << ' ' << hex_double(g.nodata) << "\n";
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x)
      out << hex_double(g.altitude(y, x)) << (x + 1 == g.width ? "" : " ");
    out << "\n";
  }
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x)
      out << static_cast<int>(g.cover(y, x)) << (x + 1 == g.width ? "" : " ");
    out << "\n";
  }
  auto dump_mask = [&](const std::vector<std::uint8_t>& mask, const char* name) {
    out << name;
    for (auto v : mask) out << ' ' << static_cast<int>(v);
    out << "\n";
  };
  dump_mask(world.trees, "trees");
  dump_mask(world.polluted, "polluted");

  out << "config " << world.config.history_length << ' ' << hex_double(world.config.death_utility)
      << "\n";
  out << "density";
  for (const auto& row : world.config.density.weight)
    for (double w : row) out << ' ' << hex_double(w);
  out << "\n";
  for (int i = 0; i < 2; ++i) {
    const auto& pp = world.config.plant_params[static_cast<std::size_t>(i)];
    out << "plant_params " << pp.regrow_delay << ' ' << static_cast<int>(pp.mode) << ' '
        << hex_double(pp.spread_probability) << ' ' << pp.population_cap << "\n";
  }
  out << "species " << world.config.species.size() << "\n";
  for (std::size_t i = 0; i < world.config.species.size(); ++i) {
    const auto& sp = world.config.species[i];
    out << sp.name << ' ' << hex_double(sp.resource_max) << ' ' << hex_double(sp.initial_resources)
        << ' ' << hex_double(sp.reproduction_threshold) << ' ' << hex_double(sp.reproduction_rate)
        << ' ' << sp.maturity_age << ' ' << sp.max_age << ' ' << sp.gestation_time << ' '
        << sp.newborn_still_time << ' ' << sp.eat_duration << ' '
        << hex_double(sp.basic_metabolic_cost) << ' ' << hex_double(sp.max_uphill_cost) << ' '
        << hex_double(sp.collision_loss) << ' ' << hex_double(sp.predation_yield) << ' '
        << hex_double(world.fertility_multiplier[i]) << ' ' << sp.diet.size();
    for (const auto& d : sp.diet) out << ' ' << d;
    out << "\n";
  }
  out << "plants " << world.plants.size() << "\n";
  for (const auto& p : world.plants) {
    out << static_cast<int>(p.species) << ' ' << p.cell.x << ' ' << p.cell.y << ' '
        << (p.available ? 1 : 0) << ' ' << p.regrow_remaining << ' ' << (p.removed ? 1 : 0)
        << "\n";
  }
  out << "animals " << world.animals.size() << "\n";
  for (const auto& a : world.animals) {
    out << a.id << ' ' << a.species << ' ' << hex_double(a.position.x()) << ' '
        << hex_double(a.position.y()) << ' ' << a.orientation_deg << ' ' << hex_double(a.glucose)
        << ' ' << hex_double(a.hydration) << ' ' << a.age << ' ' << a.gestation_remaining << ' '
        << a.still_remaining << ' ' << (a.alive ? 1 : 0) << ' ' << hex_double(a.utility_prev)
        << ' ' << (a.eating ? 1 : 0) << ' ' << hex_double(a.pending_gain_glucose) << ' '
        << hex_double(a.pending_gain_hydration) << ' ' << a.history.size();
    for (const auto& h : a.history) out << ' ' << hex_double(h.x()) << ' ' << hex_double(h.y());
    out << "\n";
  }
}

World load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open world checkpoint: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "ECOSIM_WORLD" || version != 1)
    throw std::runtime_error(path + ": not a version-1 world checkpoint");

  World world;
  auto expect = [&](const char* key) {
    std::string word;
    in >> word;
    if (word != key) throw std::runtime_error(path + ": expected '" + key + "', got '" + word + "'");
  };

  expect("clock");
  in >> world.clock;
  expect("rng");
  {
    std::string a, b, c, d;
    in >> a >> b >> c >> d;
    world.rng = Rng::deserialize(a + ' ' + b + ' ' + c + ' ' + d);
  }
  expect("grid");
  TerrainGrid& g = world.grid;
  in >> g.width >> g.height;
  g.cell_size = parse_double(in, "cell_size");
  g.sea_level = parse_double(in, "sea_level");
  g.nodata = parse_double(in, "nodata");
  g.altitude.resize(g.height, g.width);
  g.cover.resize(g.height, g.width);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) g.altitude(y, x) = parse_double(in, "altitude");
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      int code;
      in >> code;
      g.cover(y, x) = static_cast<std::uint8_t>(code);
    }
  g.refresh_min_altitude();

  const std::size_t cells = static_cast<std::size_t>(g.width) * g.height;
  auto read_mask = [&](std::vector<std::uint8_t>& mask, const char* key) {
    expect(key);
    mask.resize(cells);
    for (auto& v : mask) {
      int b;
      in >> b;
      v = static_cast<std::uint8_t>(b);
    }
  };
  read_mask(world.trees, "trees");
  read_mask(world.polluted, "polluted");

  expect("config");
  in >> world.config.history_length;
  world.config.death_utility = parse_double(in, "death_utility");
  expect("density");
  for (auto& row : world.config.density.weight)
    for (double& w : row) w = parse_double(in, "density weight");
  world.config.species.clear();
  for (int i = 0; i < 2; ++i) {
    expect("plant_params");
    auto& pp = world.config.plant_params[static_cast<std::size_t>(i)];
    int mode;
    in >> pp.regrow_delay >> mode;
    pp.spread_probability = parse_double(in, "spread_probability");
    in >> pp.population_cap;
    pp.mode = static_cast<PlantRegrowth>(mode);
  }
  expect("species");
  std::size_t n_species;
  in >> n_species;
  world.fertility_multiplier.resize(n_species);
  for (std::size_t i = 0; i < n_species; ++i) {
    SpeciesParams sp;
    in >> sp.name;
    sp.resource_max = parse_double(in, "resource_max");
    sp.initial_resources = parse_double(in, "initial_resources");
    sp.reproduction_threshold = parse_double(in, "reproduction_threshold");
    sp.reproduction_rate = parse_double(in, "reproduction_rate");
    in >> sp.maturity_age >> sp.max_age >> sp.gestation_time >> sp.newborn_still_time >>
        sp.eat_duration;
    sp.basic_metabolic_cost = parse_double(in, "basic_metabolic_cost");
    sp.max_uphill_cost = parse_double(in, "max_uphill_cost");
    sp.collision_loss = parse_double(in, "collision_loss");
    sp.predation_yield = parse_double(in, "predation_yield");
    world.fertility_multiplier[i] = parse_double(in, "fertility");
    std::size_t diet_n;
    in >> diet_n;
    sp.diet.resize(diet_n);
    for (auto& d : sp.diet) in >> d;
    world.config.species.push_back(std::move(sp));
  }
  world.derive_diets();

  expect("plants");
  std::size_t n_plants;
  in >> n_plants;
  world.plants.resize(n_plants);
  for (auto& p : world.plants) {
    int species, avail, removed;
    in >> species >> p.cell.x >> p.cell.y >> avail >> p.regrow_remaining >> removed;
    p.species = static_cast<VegSpecies>(species);
    p.available = avail != 0;
    p.removed = removed != 0;
  }
  expect("animals");
  std::size_t n_animals;
  in >> n_animals;
  world.animals.resize(n_animals);
  for (auto& a : world.animals) {
    int alive, eating;
    in >> a.id >> a.species;
    a.position.x() = parse_double(in, "x");
    a.position.y() = parse_double(in, "y");
    in >> a.orientation_deg;
    a.glucose = parse_double(in, "glucose");
    a.hydration = parse_double(in, "hydration");
    in >> a.age >> a.gestation_remaining >> a.still_remaining >> alive;
    a.utility_prev = parse_double(in, "utility_prev");
    in >> eating;
    a.pending_gain_glucose = parse_double(in, "pending_gain_glucose");
    a.pending_gain_hydration = parse_double(in, "pending_gain_hydration");
    a.alive = alive != 0;
    a.eating = eating != 0;
    std::size_t hist_n;
    in >> hist_n;
    a.history.resize(hist_n);
    for (auto& h : a.history) {
      h.x() = parse_double(in, "history x");
      h.y() = parse_double(in, "history y");
    }
  }
  if (!in) throw std::runtime_error(path + ": truncated world checkpoint");
  world.rebuild_indices();
  return world;
}

void World::rebuild_indices() {
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  cell_animals_.assign(cells, {});
  plant_cell_[0].assign(cells, -1);
  plant_cell_[1].assign(cells, -1);
  for (const auto& a : animals)
    if (a.alive) index_add(a.id, a.cell());
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const auto& p = plants[i];
    if (!p.removed)
      plant_cell_[static_cast<int>(p.species)][cell_index(p.cell)] = static_cast<int>(i);
  }
}

}  // namespace ecosim
