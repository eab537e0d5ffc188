#pragma once
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "v2r/linkstate.hpp"
#include "v2r/mac.hpp"

namespace v2r::game {

// One population class of the channel-selection game.
struct ClassTraits {
  std::string name;
  double mass = 1;        // population size
  double frame_bits = 8000;
  double zeta = 0.05;     // service-time weight in the payoff
  double weight = 1;      // count-distribution weight at the configured mass
};

// One uplink channel: its contention parameters and the per-class,
// per-region transmission rates (bits per slot).
struct ChannelSpec {
  std::string id;
  mac::MacParameters mac;
  std::vector<std::vector<double>> rates;  // [class][region]
};

// Mass allocation x[class][channel]; rows sum to the class masses.
struct GameState {
  std::vector<std::vector<double>> x;
  std::vector<double> masses;

  std::size_t classes() const { return x.size(); }
  std::size_t channels() const { return x.empty() ? 0 : x[0].size(); }
  double channel_mass(std::size_t ch) const;
  void validate(double tol = 1e-9) const;
};

GameState uniform_state(std::span<const double> masses, std::size_t channels);

// Channel-level MAC aggregates frozen at a reference occupancy. They turn
// the per-channel payoff into a weighted congestion cost
//   k0 + k1 / n + (k2_over_n) * (total airtime mass on the channel)
// which is what makes the game an exact potential game.
struct ChannelCoefficients {
  double occupancy = 0;  // reference occupancy the aggregates were solved at
  double gamma = 0;
  double beta = 0;
  double k0 = 0;         // per-frame cycle cost excluding payload airtime
  double k1 = 0;         // empty-channel service floor
  double k2_over_n = 0;  // payload-airtime multiplier per unit of occupancy
  double k2() const { return k2_over_n * occupancy; }
};

ChannelCoefficients channel_aggregates(const mac::MacParameters& p, double occupancy);

// Frozen game instance: class traits, per-channel coefficients, and the
// per-unit-mass airtime a class contributes to a channel.
struct GameProblem {
  std::vector<ClassTraits> classes;
  std::vector<ChannelCoefficients> coeffs;
  std::vector<std::vector<double>> airtime;           // [class][channel]
  std::vector<std::vector<std::uint8_t>> available;   // [class][channel]
  std::vector<std::string> channel_ids;
  double phi = 1;  // common payoff scale

  std::size_t num_classes() const { return classes.size(); }
  std::size_t num_channels() const { return coeffs.size(); }
  bool open(std::size_t cls, std::size_t ch) const;
};

// Builds the frozen problem from channel specs, region probabilities and a
// reference allocation (whose per-channel occupancy fixes the aggregates).
GameProblem build_problem(std::span<const ClassTraits> classes,
                          std::span<const ChannelSpec> channels,
                          const linkstate::RegionProbs& rp,
                          const GameState& reference, double phi = 1,
                          std::vector<std::vector<std::uint8_t>> available = {});

// Per-unit-mass throughput (bits per slot) and its service-time twin for
// class `cls` on channel `ch` under allocation `state`.
double per_unit_throughput(const GameProblem& pb, const GameState& state,
                           std::size_t cls, std::size_t ch);
double channel_service_time(const GameProblem& pb, const GameState& state,
                            std::size_t ch);

// Payoff F (throughput minus zeta-weighted service minus the class price),
// the excess payoff above the class average, and the potential.
struct PayoffReport {
  std::vector<std::vector<double>> payoff;
  std::vector<std::vector<double>> excess;
  std::vector<double> class_average;  // allocation-weighted mean payoff
  double potential = 0;
  double max_excess() const;
};

double potential(const GameProblem& pb, const GameState& state,
                 std::span<const double> prices = {});
PayoffReport payoff(const GameProblem& pb, const GameState& state,
                    std::span<const double> prices = {});

// Excess-payoff (Brown-von Neumann-Nash) growth field; never points out of
// the simplex and vanishes exactly at equilibrium.
std::vector<std::vector<double>> bnn_velocity(const GameProblem& pb,
                                              const GameState& state,
                                              const PayoffReport& report);

// One classical Runge-Kutta step of the dynamic, clipped to nonnegative
// masses and renormalized to conserve each class.
GameState bnn_step(const GameProblem& pb, const GameState& state, double h,
                   std::span<const double> prices = {});

struct BnnConfig {
  double h = 0.01;
  double eps = 1e-6;       // stop when max excess falls below this
  long max_steps = 200000;
  long record_every = 0;   // 0: keep only first and last trajectory points
};

struct TrajectoryPoint {
  long step = 0;
  double potential = 0;
  double max_excess = 0;
  double vf = 0;          // velocity-payoff inner product (positive correlation)
  std::vector<double> x;  // flattened allocation, class-major
};

struct BnnResult {
  GameState state;
  bool converged = false;
  long steps = 0;
  double potential = 0;
  double max_excess = 0;
  double min_step_gain = 0;   // most negative per-step potential change
  double max_mass_drift = 0;  // worst class-mass conservation error seen
  std::vector<TrajectoryPoint> trajectory;
};

BnnResult run_bnn(const GameProblem& pb, GameState initial, const BnnConfig& cfg,
                  std::span<const double> prices = {});

// Wardrop test: every used strategy of a class earns the class maximum
// within eps; strategies below eps_mass are treated as unused.
struct WardropViolation {
  std::size_t cls = 0, ch = 0;
  double gap = 0, mass = 0;
};
struct WardropCheck {
  bool ok = true;
  std::vector<WardropViolation> violations;
};
WardropCheck is_wardrop(const GameProblem& pb, const GameState& state,
                        double eps, double eps_mass = 1e-6,
                        std::span<const double> prices = {});

// Direct potential maximization over the product of class simplices:
// projected gradient ascent with backtracking from multiple seeded starts,
// ties broken lexicographically on the flattened allocation.
struct AscentConfig {
  int starts = 16;
  std::uint64_t seed = 1;
  long max_iters = 20000;
  double step0 = 1.0;
  double tol = 1e-12;  // stop when the projected step no longer moves
};
struct AscentResult {
  GameState state;
  double potential = 0;
  int best_start = 0;
};
AscentResult optimize_potential(const GameProblem& pb, const AscentConfig& cfg,
                                std::span<const double> prices = {});

// Euclidean projection onto the scaled simplex {v >= 0, sum v = mass}.
std::vector<double> project_simplex(std::span<const double> v, double mass);

}  // namespace v2r::game
