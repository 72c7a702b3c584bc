#pragma once

#include "ecosim/rng.hpp"
#include "ecosim/terrain.hpp"
#include "ecosim/types.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecosim {

enum class Action : int { stand_still = 0, move_forward = 1, turn_left = 2, turn_right = 3 };
inline constexpr int kActionCount = 4;

enum class DeathCause : int { drowned, predated, starved, dehydrated, old_age, road_kill, hunted };
std::string_view death_cause_name(DeathCause cause);

/// Per-species behavioural and metabolic constants.
struct SpeciesParams {
  std::string name = "hare";
  double resource_max = 5.0;
  double initial_resources = 2.0;
  double reproduction_threshold = 3.5;
  double reproduction_rate = 0.01;  // conception probability per step at full resources
  int maturity_age = 500;
  int max_age = 10000;
  int gestation_time = 20;
  int newborn_still_time = 100;
  int eat_duration = 1;  // predation lock length in steps; plant meals are instant
  double basic_metabolic_cost = 0.001;
  double max_uphill_cost = 0.001;
  double collision_loss = 0.1;
  double predation_yield = 0.0;
  std::vector<std::string> diet;  // plant species and/or animal species names

  void validate() const;
};

SpeciesParams hare_params();
SpeciesParams fox_params();

enum class PlantRegrowth : int { regrow_in_place, respawn_random, spread_roots, spread_air };

struct PlantParams {
  int regrow_delay = 200;
  PlantRegrowth mode = PlantRegrowth::regrow_in_place;
  double spread_probability = 0.0;
  int population_cap = 5000;
};

struct PlantState {
  VegSpecies species = VegSpecies::grass;  // grass or dandelion
  Cell cell;
  bool available = true;
  int regrow_remaining = 0;
  bool removed = false;
};

struct AnimalState {
  int id = 0;
  int species = 0;  // index into World::config.species
  Vector2 position{0.0, 0.0};
  int orientation_deg = 0;  // multiple of 15 in [0, 360)
  double glucose = 2.0;
  double hydration = 2.0;
  int age = 0;
  int gestation_remaining = -1;  // -1 none, 0 birth due, >0 counting down
  int still_remaining = 0;       // newborn or eating lock
  std::vector<Vector2> history;  // previous positions, most recent first
  bool alive = true;
  double utility_prev = 0.0;
  bool eating = false;
  double pending_gain_glucose = 0.0;
  double pending_gain_hydration = 0.0;

  Cell cell() const { return cell_of(position); }
  bool locked() const { return still_remaining > 0; }
};

/// Log-sum utility of the two resources; the per-step difference of this is
/// the reinforcement signal.
inline double utility(double glucose, double hydration) {
  return std::log(1.0 + glucose) + std::log(1.0 + hydration);
}

double utility(const AnimalState& animal);  // 0 when dead

enum class EventType : int {
  death,
  birth,
  conception,
  eat_plant,
  predation_start,
  predation_complete,
  collision,
  plant_removed,
  introduced,
  extinction,
  intervention,
};
std::string_view event_type_name(EventType type);

struct Event {
  long step = 0;
  EventType type = EventType::death;
  std::string species;
  int id = -1;
  std::string cause;
  double x = 0.0;
  double y = 0.0;
  // Extra payload for in-process consumers (predation accounting, gains);
  // not part of the CSV schema.
  double value_a = 0.0;
  double value_b = 0.0;
  double value_c = 0.0;
  double value_d = 0.0;
};

struct MoveRecord {
  int id = 0;
  Cell from;
  Cell to;
};

struct StepResult {
  std::vector<Event> events;
  std::map<int, double> rewards;
  std::vector<MoveRecord> moves;
  int births = 0;
  int deaths = 0;
};

struct WorldConfig {
  int history_length = 5;  // K previous positions kept per animal
  double death_utility = 0.0;
  std::vector<SpeciesParams> species;
  std::array<PlantParams, 2> plant_params{};  // grass, dandelion
  DensityTable density = DensityTable::defaults();

  WorldConfig();
  int species_index(std::string_view name) const;  // -1 when missing
};

/// All entity state plus the step loop. Single-writer: step_world mutates the
/// world exclusively; independent instances may run in parallel.
class World {
 public:
  World(TerrainGrid grid_in, const std::vector<VegetationPlacement>& vegetation,
        WorldConfig config_in, std::uint64_t seed);

  TerrainGrid grid;
  WorldConfig config;
  std::vector<AnimalState> animals;  // index == id; dead slots retained
  std::vector<PlantState> plants;
  std::vector<std::uint8_t> trees;     // per-cell obstacle mask
  std::vector<std::uint8_t> polluted;  // per-cell pollution mask
  std::vector<double> fertility_multiplier;  // per species
  long clock = 0;
  Rng rng;

  const SpeciesParams& params_of(const AnimalState& a) const { return config.species[a.species]; }
  int species_sign(int species) const { return predator_[species] ? -1 : +1; }
  bool is_predator(int species) const { return predator_[species] != 0; }

  int add_species(SpeciesParams params);

  /// Spawns an adult with initial resources at the cell center. Throws when
  /// the cell is not free. Orientation defaults to a seeded random multiple
  /// of 15 degrees.
  AnimalState& spawn_animal(int species, Cell cell, std::optional<int> orientation_deg = {});

  /// Advances the ecosystem one step through the fixed phase order:
  /// movement, sea deaths, eating, metabolism, deaths, predation locks,
  /// reproduction, plant regrowth, utility/rewards, clock.
  ///
  /// `actions` must hold exactly the alive, unlocked animals.
  StepResult step_world(const std::map<int, Action>& actions);

  void kill(int id, DeathCause cause, long step, std::vector<Event>& events);

  /// Removes plants and trees from cells whose effective cover became
  /// sea, rock, or road (flooding, road construction, cover edits).
  std::vector<Event> sync_vegetation();

  void set_polluted(const Region& region);

  bool has_tree(Cell c) const { return grid.in_bounds(c) && trees[cell_index(c)] != 0; }
  bool is_polluted(Cell c) const { return grid.in_bounds(c) && polluted[cell_index(c)] != 0; }
  /// A cell an animal can stand on or be born on.
  bool cell_free(Cell c) const { return grid.walkable(c) && !has_tree(c); }

  const std::vector<int>& animals_at(Cell c) const { return cell_animals_[cell_index(c)]; }
  int plant_index_at(VegSpecies s, Cell c) const;  // -1 when absent
  const PlantState* plant_at(VegSpecies s, Cell c) const;

  std::vector<int> alive_ids() const;
  std::vector<int> actionable_ids() const;  // alive and not locked
  int population(int species) const;
  int plant_population(VegSpecies s) const;

  /// Debug invariant: every alive animal is indexed at its own cell.
  void check_spatial_index() const;

 private:
  friend void save_world(const World& world, const std::string& path);
  friend World load_world(const std::string& path);
  World() = default;

  std::size_t cell_index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(grid.width) +
           static_cast<std::size_t>(c.x);
  }
  void index_add(int id, Cell c);
  void index_remove(int id, Cell c);
  void add_plant(PlantState plant);
  void rebuild_indices();
  void derive_diets();

  Cell clamp_to_grid(Cell c) const;
  std::optional<Cell> sample_weighted_plant_cell(VegSpecies s, Rng& r);
  std::optional<Cell> sample_uniform_plant_cell(VegSpecies s, Rng& r);

  std::vector<std::vector<int>> cell_animals_;
  std::array<std::vector<int>, 2> plant_cell_;  // per ground species: cell -> plant idx or -1

  // Derived from diets at construction.
  std::vector<std::uint8_t> predator_;                 // per species
  std::vector<std::array<std::uint8_t, 2>> eats_veg_;  // per species: grass, dandelion
  std::vector<std::vector<int>> prey_of_;              // per species: prey species indices
};

/// Versioned text checkpoint of the full world (entities, rng, clock),
/// round-trip exact.
void save_world(const World& world, const std::string& path);
World load_world(const std::string& path);

}  // namespace ecosim
