#include "v2r/pricing.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace v2r::pricing {

double priced_potential(const game::GameProblem& pb, const game::GameState& state,
                        std::span<const double> prices) {
  return game::potential(pb, state, prices);
}

game::PayoffReport priced_payoff(const game::GameProblem& pb,
                                 const game::GameState& state,
                                 std::span<const double> prices) {
  return game::payoff(pb, state, prices);
}

double rsu_gain(const game::GameProblem& pb, const game::GameState& equilibrium,
                std::span<const double> prices) {
  if (prices.size() != pb.num_classes())
    throw std::invalid_argument("prices must have one entry per class");
  double gain = 0.0;
  for (std::size_t c = 0; c < pb.num_classes(); ++c) {
    double served = 0.0;
    for (double v : equilibrium.x[c]) served += v;
    gain += pb.classes[c].zeta * pb.classes[c].weight * prices[c] * served;
  }
  return pb.phi * gain;
}

PricingResult solve_pricing(const game::GameProblem& pb,
                            const game::GameState& initial,
                            const PricingConfig& cfg) {
  if (cfg.grid.size() != pb.num_classes())
    throw std::invalid_argument("price grid must have one row per class");
  for (const std::vector<double>& row : cfg.grid)
    if (row.empty())
      throw std::invalid_argument("every class needs at least one price option");

  PricingResult res;
  bool have_best = false;
  std::vector<std::size_t> idx(cfg.grid.size(), 0);

  while (true) {
    std::vector<double> prices(cfg.grid.size());
    for (std::size_t c = 0; c < cfg.grid.size(); ++c)
      prices[c] = cfg.grid[c][idx[c]];

    game::BnnResult run = game::run_bnn(pb, initial, cfg.bnn, prices);
    PricingPoint pt;
    pt.prices = prices;
    pt.converged = run.converged;
    pt.gain = rsu_gain(pb, run.state, prices);
    pt.potential = run.potential;

    if (!run.converged) {
      std::string label;
      for (std::size_t c = 0; c < prices.size(); ++c)
        label += (c ? "," : "") + std::to_string(prices[c]);
      std::fprintf(stderr,
                   "pricing: equilibrium search did not settle at prices (%s); "
                   "point excluded\n",
                   label.c_str());
    } else if (!have_best || pt.gain > res.best.gain) {
      res.best = pt;
      res.equilibrium = run.state;
      have_best = true;
    }
    res.grid.push_back(std::move(pt));

    // odometer over the grid, last class fastest
    bool more = false;
    for (std::size_t c = cfg.grid.size(); c-- > 0;) {
      if (++idx[c] < cfg.grid[c].size()) {
        more = true;
        break;
      }
      idx[c] = 0;
    }
    if (!more) break;
  }

  if (!have_best)
    throw std::runtime_error("no price combination reached equilibrium");
  return res;
}

}  // namespace v2r::pricing
