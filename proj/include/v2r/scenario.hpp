#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2r/game.hpp"
#include "v2r/linkstate.hpp"
#include "v2r/pricing.hpp"
#include "v2r/sim.hpp"
#include "v2r/traffic.hpp"

namespace v2r::scenario {

// Validation failure that names the offending JSON field.
struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& field, const std::string& why)
      : std::runtime_error(field + ": " + why), field(field) {}
  std::string field;
};

struct GameSettings {
  std::vector<double> masses;      // empty: use expected counts per class
  game::BnnConfig bnn;
  game::AscentConfig ascent;
  std::vector<std::vector<std::uint8_t>> available;  // empty: all open
  double eps_mass = 1e-6;
};

struct PricingSettings {
  std::vector<std::vector<double>> grid;  // [class][option]
  game::BnnConfig bnn;                    // dynamics used per grid point
  bool own_bnn = false;                   // false: inherit game.bnn
};

struct SimSettings {
  long horizon = 1100000;
  long warmup = -1;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<std::vector<int>> nodes;  // [channel][class] counts
};

struct OutputSettings {
  std::string format = "csv";  // csv | json
  std::string path = "-";
};

struct SweepSettings {
  std::vector<double> lambda;  // densities to sweep for the first class
  int cls = 0;                 // class index being swept
};

struct Scenario {
  std::string name;
  double d = 1200;    // coverage length, meters
  double v_max = 0;   // m/s, fleet metadata for reporting only
  double v_min = 0;   // m/s, fleet metadata for reporting only
  std::vector<traffic::VehicleClass> classes;
  linkstate::RegionModel regions;
  std::vector<game::ChannelSpec> channels;
  double phi = -1;  // negative: computed from the joint count law
  GameSettings game;
  PricingSettings pricing;
  SimSettings sim;
  sim::CompareBounds bounds;
  SweepSettings sweep;
  OutputSettings output;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string serialize_scenario(const Scenario& sc);

// Class masses: explicit game.masses if given, else expected vehicle
// counts on [0, d] per class.
std::vector<double> class_masses(const Scenario& sc);

// Frozen game problem at the given reference allocation (uniform split by
// default).
game::GameProblem build_game(const Scenario& sc);
game::GameProblem build_game(const Scenario& sc, const game::GameState& reference);

// Simulation config; node counts default to rounded class masses split
// evenly across channels when sim.nodes is empty.
sim::SimConfig build_sim(const Scenario& sc);

// Uniform deterministic result table: one header row plus string cells,
// rendered as CSV ("# schema=1" first line, '.' decimal point) or JSON.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> cells);
};

std::string format_number(double v);
std::string to_csv(const Table& t);
std::string to_json(const Table& t);
std::string render(const Table& t, const std::string& format);
void write_output(const Table& t, const OutputSettings& out);

}  // namespace v2r::scenario
