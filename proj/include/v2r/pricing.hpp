#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "v2r/game.hpp"

namespace v2r::pricing {

// Vehicle side: potential and payoffs under a per-class price vector are
// the unpriced ones shifted by the class charges.
double priced_potential(const game::GameProblem& pb, const game::GameState& state,
                        std::span<const double> prices);
game::PayoffReport priced_payoff(const game::GameProblem& pb,
                                 const game::GameState& state,
                                 std::span<const double> prices);

// RSU side: revenue-weighted count objective at an equilibrium allocation.
double rsu_gain(const game::GameProblem& pb, const game::GameState& equilibrium,
                std::span<const double> prices);

// Exhaustive search over the per-class price grid: every combination is
// priced in, the vehicle game re-run to equilibrium, and the RSU gain
// compared; ties break lexicographically on the price vector.
struct PricingConfig {
  std::vector<std::vector<double>> grid;  // [class][option]
  game::BnnConfig bnn;
};

struct PricingPoint {
  std::vector<double> prices;
  double gain = 0;
  double potential = 0;
  bool converged = false;
};

struct PricingResult {
  PricingPoint best;
  std::vector<PricingPoint> grid;   // every evaluated combination
  game::GameState equilibrium;      // allocation at the best prices
};

PricingResult solve_pricing(const game::GameProblem& pb,
                            const game::GameState& initial,
                            const PricingConfig& cfg);

}  // namespace v2r::pricing
