#include "v2r/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace v2r::game {

namespace {

double row_sum(const std::vector<double>& row) {
  return std::accumulate(row.begin(), row.end(), 0.0);
}

// Airtime load on channel l: sum_c x[c][l] * airtime[c][l].
double channel_load(const GameProblem& pb, const GameState& s, std::size_t l) {
  double load = 0.0;
  for (std::size_t c = 0; c < pb.num_classes(); ++c)
    load += s.x[c][l] * pb.airtime[c][l];
  return load;
}

void check_dims(const GameProblem& pb, const GameState& s) {
  if (s.x.size() != pb.num_classes() || s.masses.size() != pb.num_classes())
    throw std::invalid_argument("state does not match the problem's classes");
  for (const std::vector<double>& row : s.x)
    if (row.size() != pb.num_channels())
      throw std::invalid_argument("state does not match the problem's channels");
}

void check_prices(const GameProblem& pb, std::span<const double> prices) {
  if (!prices.empty() && prices.size() != pb.num_classes())
    throw std::invalid_argument("prices must have one entry per class");
}

}  // namespace

double GameState::channel_mass(std::size_t ch) const {
  double total = 0.0;
  for (const std::vector<double>& row : x) total += row[ch];
  return total;
}

void GameState::validate(double tol) const {
  if (x.size() != masses.size())
    throw std::invalid_argument("one allocation row per class required");
  std::size_t cols = x.empty() ? 0 : x[0].size();
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c].size() != cols)
      throw std::invalid_argument("allocation rows must have equal length");
    double sum = 0.0;
    for (double v : x[c]) {
      if (v < -tol)
        throw std::invalid_argument("allocation entries must be nonnegative");
      sum += v;
    }
    if (std::fabs(sum - masses[c]) > tol * std::max(1.0, masses[c]))
      throw std::invalid_argument("allocation row must sum to the class mass");
  }
}

GameState uniform_state(std::span<const double> masses, std::size_t channels) {
  if (channels == 0) throw std::invalid_argument("channels must be positive");
  GameState s;
  s.masses.assign(masses.begin(), masses.end());
  s.x.resize(masses.size());
  for (std::size_t c = 0; c < masses.size(); ++c)
    s.x[c].assign(channels, masses[c] / double(channels));
  return s;
}

ChannelCoefficients channel_aggregates(const mac::MacParameters& p,
                                       double occupancy) {
  double n = std::max(occupancy, 0.0);
  mac::DcfFixedPoint fp = mac::solve_fixed_point(p, n);
  double a = std::pow(1.0 - fp.beta, std::max(n - 1.0, 0.0));
  double ba = fp.beta * a;
  ChannelCoefficients co;
  co.occupancy = occupancy;
  co.gamma = fp.gamma;
  co.beta = fp.beta;
  co.k0 = 1.0 / ba + n * (p.t_overhead - p.t_collision) +
          (1.0 / ba + 1.0 - 1.0 / fp.beta) * p.t_collision;
  double reach = 1.0 - std::pow(fp.gamma, double(p.m + 1));
  co.k1 = reach * co.k0 * ba;
  co.k2_over_n = reach * ba;
  return co;
}

bool GameProblem::open(std::size_t cls, std::size_t ch) const {
  if (available.empty()) return true;
  return available[cls][ch] != 0;
}

GameProblem build_problem(std::span<const ClassTraits> classes,
                          std::span<const ChannelSpec> channels,
                          const linkstate::RegionProbs& rp,
                          const GameState& reference, double phi,
                          std::vector<std::vector<std::uint8_t>> available) {
  if (classes.empty()) throw std::invalid_argument("at least one class required");
  if (channels.empty())
    throw std::invalid_argument("at least one channel required");
  if (rp.p.empty()) throw std::invalid_argument("region probabilities required");
  if (reference.x.size() != classes.size())
    throw std::invalid_argument("reference allocation must cover every class");
  if (!available.empty() && available.size() != classes.size())
    throw std::invalid_argument("availability mask must cover every class");

  GameProblem pb;
  pb.classes.assign(classes.begin(), classes.end());
  pb.phi = phi;
  pb.available = std::move(available);
  pb.airtime.assign(classes.size(),
                    std::vector<double>(channels.size(), 0.0));

  for (std::size_t l = 0; l < channels.size(); ++l) {
    const ChannelSpec& ch = channels[l];
    mac::validate(ch.mac);
    if (reference.x[0].size() != channels.size())
      throw std::invalid_argument("reference allocation must cover every channel");
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const std::vector<double>& row =
          ch.rates.size() == 1 ? ch.rates[0] : ch.rates.at(c);
      if (row.size() != 1 && row.size() != rp.p.size())
        throw std::invalid_argument("rate rows must match the region count");
      double airtime = 0.0;
      for (std::size_t f = 0; f < rp.p.size(); ++f) {
        double rate = row.size() == 1 ? row[0] : row[f];
        if (rate <= 0.0) throw std::invalid_argument("rates must be positive");
        airtime += rp.p[f] * classes[c].frame_bits / rate;
      }
      pb.airtime[c][l] = airtime;
    }
    pb.coeffs.push_back(channel_aggregates(ch.mac, reference.channel_mass(l)));
    pb.channel_ids.push_back(ch.id);
  }
  return pb;
}

double per_unit_throughput(const GameProblem& pb, const GameState& state,
                           std::size_t cls, std::size_t ch) {
  check_dims(pb, state);
  double denom = pb.coeffs[ch].k0 + channel_load(pb, state, ch);
  return pb.classes[cls].frame_bits / denom;
}

double channel_service_time(const GameProblem& pb, const GameState& state,
                            std::size_t ch) {
  check_dims(pb, state);
  return pb.coeffs[ch].k1 +
         pb.coeffs[ch].k2_over_n * channel_load(pb, state, ch);
}

double potential(const GameProblem& pb, const GameState& state,
                 std::span<const double> prices) {
  check_dims(pb, state);
  check_prices(pb, prices);
  double th = 0.0, sv = 0.0;
  for (std::size_t l = 0; l < pb.num_channels(); ++l) {
    double load = channel_load(pb, state, l);
    double denom = pb.coeffs[l].k0 + load;
    double service = pb.coeffs[l].k1 + pb.coeffs[l].k2_over_n * load;
    for (std::size_t c = 0; c < pb.num_classes(); ++c) {
      const ClassTraits& tr = pb.classes[c];
      th += tr.weight * state.x[c][l] * tr.frame_bits / denom;
      sv += tr.zeta * tr.weight * state.x[c][l] * service;
    }
  }
  double priced = 0.0;
  if (!prices.empty()) {
    for (std::size_t c = 0; c < pb.num_classes(); ++c) {
      const ClassTraits& tr = pb.classes[c];
      priced += tr.zeta * tr.weight * prices[c] * row_sum(state.x[c]);
    }
  }
  return pb.phi * (th - sv - priced);
}

PayoffReport payoff(const GameProblem& pb, const GameState& state,
                    std::span<const double> prices) {
  check_dims(pb, state);
  check_prices(pb, prices);
  std::size_t C = pb.num_classes(), L = pb.num_channels();
  PayoffReport rep;
  rep.payoff.assign(C, std::vector<double>(L, 0.0));
  rep.excess.assign(C, std::vector<double>(L, 0.0));
  rep.class_average.assign(C, 0.0);

  for (std::size_t l = 0; l < L; ++l) {
    double load = channel_load(pb, state, l);
    double denom = pb.coeffs[l].k0 + load;
    double service = pb.coeffs[l].k1 + pb.coeffs[l].k2_over_n * load;
    double occupied_throughput = 0.0;  // sum_i pi_i x_il L_i / A_l
    double weighted_mass = 0.0;        // sum_i zeta_i pi_i x_il
    for (std::size_t i = 0; i < C; ++i) {
      const ClassTraits& tr = pb.classes[i];
      occupied_throughput += tr.weight * state.x[i][l] * tr.frame_bits / denom;
      weighted_mass += tr.zeta * tr.weight * state.x[i][l];
    }
    for (std::size_t c = 0; c < C; ++c) {
      const ClassTraits& tr = pb.classes[c];
      double value = tr.weight * tr.frame_bits / denom -
                     pb.airtime[c][l] / denom * occupied_throughput -
                     pb.coeffs[l].k2_over_n * pb.airtime[c][l] * weighted_mass -
                     tr.zeta * tr.weight * service;
      if (!prices.empty()) value -= tr.zeta * tr.weight * prices[c];
      rep.payoff[c][l] = pb.phi * value;
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    double mass = state.masses[c];
    if (mass > 0.0) {
      double acc = 0.0;
      for (std::size_t l = 0; l < L; ++l) acc += state.x[c][l] * rep.payoff[c][l];
      rep.class_average[c] = acc / mass;
    }
    for (std::size_t l = 0; l < L; ++l) {
      if (!pb.open(c, l)) continue;
      rep.excess[c][l] = std::max(rep.payoff[c][l] - rep.class_average[c], 0.0);
    }
  }
  rep.potential = potential(pb, state, prices);
  return rep;
}

double PayoffReport::max_excess() const {
  double best = 0.0;
  for (const std::vector<double>& row : excess)
    for (double v : row) best = std::max(best, v);
  return best;
}

std::vector<std::vector<double>> bnn_velocity(const GameProblem& pb,
                                              const GameState& state,
                                              const PayoffReport& report) {
  std::size_t C = pb.num_classes(), L = pb.num_channels();
  std::vector<std::vector<double>> v(C, std::vector<double>(L, 0.0));
  for (std::size_t c = 0; c < C; ++c) {
    double total = 0.0;
    std::vector<double> k(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      k[l] = pb.open(c, l) ? std::max(report.excess[c][l], 0.0) : 0.0;
      total += k[l];
    }
    for (std::size_t l = 0; l < L; ++l)
      v[c][l] = state.masses[c] * k[l] - state.x[c][l] * total;
  }
  return v;
}

GameState bnn_step(const GameProblem& pb, const GameState& state, double h,
                   std::span<const double> prices) {
  auto velocity = [&](const GameState& at) {
    return bnn_velocity(pb, at, payoff(pb, at, prices));
  };
  auto shifted = [&](const GameState& base,
                     const std::vector<std::vector<double>>& dir, double scale) {
    GameState s = base;
    for (std::size_t c = 0; c < s.x.size(); ++c)
      for (std::size_t l = 0; l < s.x[c].size(); ++l)
        s.x[c][l] += scale * dir[c][l];
    return s;
  };

  std::vector<std::vector<double>> v1 = velocity(state);
  std::vector<std::vector<double>> v2 = velocity(shifted(state, v1, 0.5 * h));
  std::vector<std::vector<double>> v3 = velocity(shifted(state, v2, 0.5 * h));
  std::vector<std::vector<double>> v4 = velocity(shifted(state, v3, h));

  GameState next = state;
  for (std::size_t c = 0; c < next.x.size(); ++c) {
    for (std::size_t l = 0; l < next.x[c].size(); ++l) {
      double slope = (v1[c][l] + 2.0 * v2[c][l] + 2.0 * v3[c][l] + v4[c][l]) / 6.0;
      next.x[c][l] = std::max(next.x[c][l] + h * slope, 0.0);
    }
    double sum = row_sum(next.x[c]);
    if (sum > 0.0) {
      double scale = next.masses[c] / sum;
      for (double& v : next.x[c]) v *= scale;
    }
  }
  return next;
}

BnnResult run_bnn(const GameProblem& pb, GameState initial, const BnnConfig& cfg,
                  std::span<const double> prices) {
  check_dims(pb, initial);
  if (cfg.h <= 0.0) throw std::invalid_argument("step size must be positive");

  BnnResult res;
  res.state = std::move(initial);

  auto snapshot = [&](long step, const PayoffReport& rep) {
    TrajectoryPoint pt;
    pt.step = step;
    pt.potential = rep.potential;
    pt.max_excess = rep.max_excess();
    std::vector<std::vector<double>> v = bnn_velocity(pb, res.state, rep);
    for (std::size_t c = 0; c < v.size(); ++c)
      for (std::size_t l = 0; l < v[c].size(); ++l)
        pt.vf += v[c][l] * rep.payoff[c][l];
    for (const std::vector<double>& row : res.state.x)
      pt.x.insert(pt.x.end(), row.begin(), row.end());
    res.trajectory.push_back(std::move(pt));
  };

  PayoffReport rep = payoff(pb, res.state, prices);
  snapshot(0, rep);
  double value = rep.potential;
  res.converged = rep.max_excess() < cfg.eps;

  long step = 0;
  while (!res.converged && step < cfg.max_steps) {
    ++step;
    res.state = bnn_step(pb, res.state, cfg.h, prices);
    rep = payoff(pb, res.state, prices);
    double gain = rep.potential - value;
    res.min_step_gain = std::min(res.min_step_gain, gain);
    if (gain < -1e-9)
      throw std::runtime_error(
          "potential decreased along the dynamic; reduce the step size");
    value = rep.potential;
    for (std::size_t c = 0; c < res.state.x.size(); ++c) {
      double drift = std::fabs(row_sum(res.state.x[c]) - res.state.masses[c]);
      res.max_mass_drift = std::max(res.max_mass_drift, drift);
    }
    res.converged = rep.max_excess() < cfg.eps;
    if (cfg.record_every > 0 && step % cfg.record_every == 0 && !res.converged)
      snapshot(step, rep);
  }
  snapshot(step, rep);
  res.steps = step;
  res.potential = rep.potential;
  res.max_excess = rep.max_excess();
  return res;
}

WardropCheck is_wardrop(const GameProblem& pb, const GameState& state,
                        double eps, double eps_mass,
                        std::span<const double> prices) {
  PayoffReport rep = payoff(pb, state, prices);
  WardropCheck check;
  for (std::size_t c = 0; c < pb.num_classes(); ++c) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < pb.num_channels(); ++l)
      if (pb.open(c, l)) best = std::max(best, rep.payoff[c][l]);
    for (std::size_t l = 0; l < pb.num_channels(); ++l) {
      if (!pb.open(c, l) || state.x[c][l] <= eps_mass) continue;
      double gap = best - rep.payoff[c][l];
      if (gap > eps) {
        check.ok = false;
        check.violations.push_back({c, l, gap, state.x[c][l]});
      }
    }
  }
  return check;
}

std::vector<double> project_simplex(std::span<const double> v, double mass) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  std::size_t rho = 0;
  double running = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    running += u[i];
    if (u[i] + (mass - running) / double(i + 1) > 0.0) {
      rho = i;
      css = running;
    }
  }
  tau = (css - mass) / double(rho + 1);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

AscentResult optimize_potential(const GameProblem& pb, const AscentConfig& cfg,
                                std::span<const double> prices) {
  check_prices(pb, prices);
  std::size_t C = pb.num_classes(), L = pb.num_channels();

  // Projection restricted to the class's open channels.
  auto project_open = [&](std::size_t c, const std::vector<double>& row) {
    std::vector<double> sub;
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < L; ++l) {
      if (!pb.open(c, l)) continue;
      sub.push_back(row[l]);
      idx.push_back(l);
    }
    std::vector<double> proj = project_simplex(sub, pb.classes[c].mass);
    std::vector<double> out(L, 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = proj[i];
    return out;
  };

  AscentResult best;
  bool have_best = false;
  for (int s = 0; s < cfg.starts; ++s) {
    std::mt19937_64 rng(cfg.seed + std::uint64_t(s));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GameState x;
    x.masses.resize(C);
    x.x.assign(C, std::vector<double>(L, 0.0));
    for (std::size_t c = 0; c < C; ++c) {
      x.masses[c] = pb.classes[c].mass;
      double sum = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        if (!pb.open(c, l)) continue;
        x.x[c][l] = -std::log(1.0 - uni(rng));
        sum += x.x[c][l];
      }
      if (sum <= 0.0)
        throw std::invalid_argument("every class needs an open channel");
      for (std::size_t l = 0; l < L; ++l)
        x.x[c][l] *= pb.classes[c].mass / sum;
    }

    double value = potential(pb, x, prices);
    for (long it = 0; it < cfg.max_iters; ++it) {
      PayoffReport rep = payoff(pb, x, prices);
      double step = cfg.step0;
      GameState candidate = x;
      double cand_value = value;
      bool improved = false;
      while (step > 1e-18) {
        GameState trial = x;
        for (std::size_t c = 0; c < C; ++c) {
          std::vector<double> moved(L, 0.0);
          for (std::size_t l = 0; l < L; ++l)
            moved[l] = x.x[c][l] + step * rep.payoff[c][l];
          trial.x[c] = project_open(c, moved);
        }
        double trial_value = potential(pb, trial, prices);
        if (trial_value > value + 1e-15) {
          candidate = std::move(trial);
          cand_value = trial_value;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
      double moved = 0.0;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t l = 0; l < L; ++l)
          moved = std::max(moved, std::fabs(candidate.x[c][l] - x.x[c][l]));
      x = std::move(candidate);
      value = cand_value;
      if (moved < cfg.tol) break;
    }

    bool take = !have_best || value > best.potential + 1e-9;
    if (have_best && !take && value > best.potential - 1e-9) {
      // tie: keep the lexicographically smaller flattened allocation
      bool decided = false;
      for (std::size_t c = 0; c < C && !decided; ++c) {
        for (std::size_t l = 0; l < L && !decided; ++l) {
          if (x.x[c][l] < best.state.x[c][l] - 1e-12) {
            take = true;
            decided = true;
          } else if (x.x[c][l] > best.state.x[c][l] + 1e-12) {
            decided = true;
          }
        }
      }
    }
    if (take) {
      best.state = x;
      best.potential = value;
      best.best_start = s;
      have_best = true;
    }
  }
  return best;
}

}  // namespace v2r::game
