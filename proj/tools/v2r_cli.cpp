// Scenario-driven front end: every subcommand loads one scenario file,
// delegates to a library call, and emits a deterministic table.
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "v2r/game.hpp"
#include "v2r/linkstate.hpp"
#include "v2r/mac.hpp"
#include "v2r/pricing.hpp"
#include "v2r/scenario.hpp"
#include "v2r/sim.hpp"
#include "v2r/traffic.hpp"

namespace {

using namespace v2r;
using scenario::format_number;
using scenario::Table;

struct Options {
  std::string scenario_path;
  std::string out;     // overrides output.path when set
  std::string format;  // overrides output.format when set
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

using Notes = std::vector<std::pair<std::string, std::string>>;

scenario::Scenario load(const Options& opt) {
  scenario::Scenario sc = scenario::load_scenario(opt.scenario_path);
  if (!opt.format.empty()) sc.output.format = opt.format;
  if (!opt.out.empty()) sc.output.path = opt.out;
  if (opt.seed_set) {
    sc.sim.seed = opt.seed;
    sc.game.ascent.seed = opt.seed;
  }
  return sc;
}

// Renders the table, appends run-level notes (CSV comment lines, extra JSON
// keys), and writes to the configured destination.
void emit(const Table& t, const scenario::Scenario& sc, const Options& opt,
          const Notes& notes = {}) {
  std::string text;
  if (sc.output.format == "csv") {
    text = scenario::to_csv(t);
    for (const auto& [key, value] : notes) text += "# " + key + "=" + value + "\n";
  } else {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(scenario::to_json(t));
    for (const auto& [key, value] : notes) j[key] = value;
    text = j.dump(2) + "\n";
  }
  if (sc.output.path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    std::ofstream f(sc.output.path);
    if (!f)
      throw scenario::ScenarioError("output.path",
                                    "cannot open '" + sc.output.path + "'");
    f << text;
  }
  if (!opt.quiet)
    std::cerr << t.rows.size() << " rows -> " << sc.output.path << "\n";
}

// Shared reference view: class masses, their mix, and the uniform per-channel
// occupancy that the frozen game aggregates use.
struct ReferenceView {
  std::vector<double> masses;
  std::vector<double> shares;
  std::vector<double> frame_bits;
  double occupancy = 0;
};

ReferenceView reference_view(const scenario::Scenario& sc) {
  ReferenceView v;
  v.masses = scenario::class_masses(sc);
  double total = 0.0;
  for (double m : v.masses) total += m;
  for (double m : v.masses) v.shares.push_back(m / total);
  for (const traffic::VehicleClass& vc : sc.classes)
    v.frame_bits.push_back(vc.frame_bits);
  v.occupancy = total / double(sc.channels.size());
  return v;
}

int cmd_traffic_dist(const scenario::Scenario& sc, const Options& opt) {
  Table t;
  if (sc.sweep.lambda.empty()) {
    t.columns = {"class", "n", "prob"};
    for (const traffic::VehicleClass& vc : sc.classes) {
      traffic::CountPmf pmf = traffic::count_pmf(vc, sc.d);
      for (std::size_t n = 0; n < pmf.probs.size(); ++n)
        t.add_row({vc.name, std::to_string(n), format_number(pmf.probs[n])});
    }
    emit(t, sc, opt);
    return 0;
  }
  t.columns = {"lambda", "mean_count"};
  std::vector<double> sweep = sc.sweep.lambda;
  std::sort(sweep.begin(), sweep.end());
  for (double lam : sweep) {
    std::vector<traffic::VehicleClass> classes = sc.classes;
    classes[std::size_t(sc.sweep.cls)].lambda = lam;
    double mean = traffic::joint_count_pmf(classes, sc.d).mean();
    t.add_row({format_number(lam), format_number(mean)});
  }
  emit(t, sc, opt);
  return 0;
}

int cmd_fixed_point(const scenario::Scenario& sc, const Options& opt) {
  ReferenceView v = reference_view(sc);
  sim::SimConfig view = scenario::build_sim(sc);
  Table t;
  t.columns = {"channel", "n",  "gamma",    "beta_c",
               "beta",    "p0", "residual", "iterations"};
  for (std::size_t l = 0; l < sc.channels.size(); ++l) {
    mac::PayloadMixture mix = mac::PayloadMixture::from_regions(
        view.region_probs, v.shares, v.frame_bits, view.channels[l].rates);
    mac::DcfFixedPoint fp =
        mac::solve_fixed_point(sc.channels[l].mac, v.occupancy, mix);
    t.add_row({sc.channels[l].id, format_number(v.occupancy),
               format_number(fp.gamma), format_number(fp.beta_c),
               format_number(fp.beta), format_number(fp.p0),
               format_number(fp.residual), std::to_string(fp.iterations)});
  }
  emit(t, sc, opt);
  return 0;
}

int cmd_service_time(const scenario::Scenario& sc, const Options& opt) {
  ReferenceView v = reference_view(sc);
  sim::SimConfig view = scenario::build_sim(sc);
  Table t;
  t.columns = {"channel", "n", "mean_slots"};
  for (std::size_t l = 0; l < sc.channels.size(); ++l) {
    const mac::MacParameters& p = sc.channels[l].mac;
    mac::PayloadMixture mix = mac::PayloadMixture::from_regions(
        view.region_probs, v.shares, v.frame_bits, view.channels[l].rates);
    mac::DcfFixedPoint fp = mac::solve_fixed_point(p, v.occupancy, mix);
    mac::ChannelStateProbs st = mac::channel_state_probs(fp.beta, v.occupancy);
    double mean = mac::mean_service_time(p, fp, st, view.region_probs, v.shares,
                                         v.frame_bits, view.channels[l].rates,
                                         v.occupancy);
    t.add_row({sc.channels[l].id, format_number(v.occupancy),
               format_number(mean)});
  }
  emit(t, sc, opt);
  return 0;
}

int cmd_throughput(const scenario::Scenario& sc, const Options& opt) {
  ReferenceView v = reference_view(sc);
  sim::SimConfig view = scenario::build_sim(sc);
  Table t;
  t.columns = {"channel", "class", "throughput"};
  for (std::size_t l = 0; l < sc.channels.size(); ++l) {
    const mac::MacParameters& p = sc.channels[l].mac;
    mac::PayloadMixture mix = mac::PayloadMixture::from_regions(
        view.region_probs, v.shares, v.frame_bits, view.channels[l].rates);
    mac::DcfFixedPoint fp = mac::solve_fixed_point(p, v.occupancy, mix);
    std::vector<double> mixed_rates;
    for (std::size_t c = 0; c < sc.classes.size(); ++c) {
      double inv = 0.0;
      for (std::size_t f = 0; f < view.region_probs.p.size(); ++f)
        inv += view.region_probs.p[f] / view.channels[l].rates[c][f];
      mixed_rates.push_back(1.0 / inv);
    }
    std::vector<double> th =
        mac::throughput(p, fp, v.occupancy, v.shares, v.frame_bits, mixed_rates);
    for (std::size_t c = 0; c < sc.classes.size(); ++c)
      t.add_row({sc.channels[l].id, sc.classes[c].name, format_number(th[c])});
  }
  emit(t, sc, opt);
  return 0;
}

int cmd_game_run(const scenario::Scenario& sc, const Options& opt) {
  game::GameProblem pb = scenario::build_game(sc);
  game::GameState start =
      game::uniform_state(scenario::class_masses(sc), pb.num_channels());
  game::BnnResult res = game::run_bnn(pb, start, sc.game.bnn);
  Table t;
  t.columns = {"step", "theta", "max_excess", "vf"};
  for (std::size_t c = 0; c < pb.num_classes(); ++c)
    for (std::size_t l = 0; l < pb.num_channels(); ++l)
      t.columns.push_back("x_" + std::to_string(c) + "_" + std::to_string(l));
  for (const game::TrajectoryPoint& pt : res.trajectory) {
    std::vector<std::string> row = {std::to_string(pt.step),
                                    format_number(pt.potential),
                                    format_number(pt.max_excess),
                                    format_number(pt.vf)};
    for (double x : pt.x) row.push_back(format_number(x));
    t.add_row(std::move(row));
  }
  emit(t, sc, opt,
       {{"steps", std::to_string(res.steps)},
        {"converged", res.converged ? "true" : "false"}});
  return 0;
}

int cmd_game_optimize(const scenario::Scenario& sc, const Options& opt) {
  game::GameProblem pb = scenario::build_game(sc);
  game::AscentResult res = game::optimize_potential(pb, sc.game.ascent);
  Table t;
  t.columns = {"class", "channel", "x"};
  for (std::size_t c = 0; c < pb.num_classes(); ++c)
    for (std::size_t l = 0; l < pb.num_channels(); ++l)
      t.add_row({pb.classes[c].name, pb.channel_ids[l],
                 format_number(res.state.x[c][l])});
  emit(t, sc, opt,
       {{"potential", format_number(res.potential)},
        {"best_start", std::to_string(res.best_start)}});
  return 0;
}

int cmd_pricing(const scenario::Scenario& sc, const Options& opt) {
  if (sc.pricing.grid.empty())
    throw scenario::ScenarioError("pricing.grid", "no price grid configured");
  game::GameProblem pb = scenario::build_game(sc);
  game::GameState start =
      game::uniform_state(scenario::class_masses(sc), pb.num_channels());
  pricing::PricingConfig cfg;
  cfg.grid = sc.pricing.grid;
  cfg.bnn = sc.pricing.own_bnn ? sc.pricing.bnn : sc.game.bnn;
  pricing::PricingResult res = pricing::solve_pricing(pb, start, cfg);
  Table t;
  for (std::size_t c = 0; c < pb.num_classes(); ++c)
    t.columns.push_back("p_" + pb.classes[c].name);
  t.columns.insert(t.columns.end(), {"gain", "theta", "converged", "best"});
  for (const pricing::PricingPoint& pt : res.grid) {
    std::vector<std::string> row;
    for (double p : pt.prices) row.push_back(format_number(p));
    row.push_back(format_number(pt.gain));
    row.push_back(format_number(pt.potential));
    row.push_back(pt.converged ? "true" : "false");
    row.push_back(pt.prices == res.best.prices ? "1" : "0");
    t.add_row(std::move(row));
  }
  emit(t, sc, opt, {{"best_gain", format_number(res.best.gain)}});
  return 0;
}

int cmd_simulate(const scenario::Scenario& sc, const Options& opt) {
  sim::SimConfig cfg = scenario::build_sim(sc);
  sim::SimResult res = sim::run(cfg);
  Table t;
  t.columns = {"channel", "class", "metric", "value"};
  for (const sim::ChannelStats& ch : res.channels) {
    auto all = [&](const char* metric, const std::string& value) {
      t.add_row({ch.id, "all", metric, value});
    };
    all("freq_idle", format_number(ch.freq_idle));
    all("freq_success", format_number(ch.freq_success));
    all("freq_collision", format_number(ch.freq_collision));
    all("collision_rate", format_number(ch.collision_rate));
    all("attempts", std::to_string(ch.attempts));
    all("collisions", std::to_string(ch.collisions));
    all("mean_service", format_number(ch.mean_service));
    all("ci_service", format_number(ch.ci_service));
    all("node_throughput", format_number(ch.node_throughput));
    for (std::size_t c = 0; c < ch.per_class.size(); ++c) {
      const sim::ClassStats& cs = ch.per_class[c];
      std::string cls = std::to_string(c);
      t.add_row({ch.id, cls, "delivered", std::to_string(cs.delivered)});
      t.add_row({ch.id, cls, "dropped", std::to_string(cs.dropped)});
      t.add_row({ch.id, cls, "throughput", format_number(cs.throughput)});
      t.add_row({ch.id, cls, "mean_service", format_number(cs.mean_service)});
      t.add_row({ch.id, cls, "ci_service", format_number(cs.ci_service)});
    }
  }
  emit(t, sc, opt);
  return 0;
}

int cmd_compare(const scenario::Scenario& sc, const Options& opt) {
  sim::CompareReport rep =
      sim::compare_with_analytic(scenario::build_sim(sc), sc.bounds);
  Table t;
  t.columns = {"channel", "metric", "analytic", "simulated",
               "error",   "bound",  "relative", "ok"};
  for (const sim::CompareRow& row : rep.rows) {
    t.add_row({row.channel, row.metric, format_number(row.analytic),
               format_number(row.simulated), format_number(row.error),
               format_number(row.bound), row.relative ? "rel" : "abs",
               row.ok ? "true" : "false"});
  }
  emit(t, sc, opt, {{"all_ok", rep.all_ok ? "true" : "false"}});
  return rep.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"V2R uplink analysis: contention model, channel game, pricing, simulator"};
  app.require_subcommand(1);

  Options opt;
  std::function<int(const scenario::Scenario&, const Options&)> action;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const scenario::Scenario&, const Options&);
  };
  const Entry entries[] = {
      {"traffic-dist", "vehicle count distribution (or the configured density sweep)",
       cmd_traffic_dist},
      {"fixed-point", "per-channel contention fixed point at the reference occupancy",
       cmd_fixed_point},
      {"service-time", "per-channel mean frame service time", cmd_service_time},
      {"throughput", "per-channel, per-class saturation throughput", cmd_throughput},
      {"game-run", "channel-selection dynamics trajectory", cmd_game_run},
      {"game-optimize", "direct potential maximization", cmd_game_optimize},
      {"pricing", "grid search over the per-class price menu", cmd_pricing},
      {"simulate", "slotted contention simulation", cmd_simulate},
      {"compare", "analytic model vs simulation (exit 1 on a violated bound)",
       cmd_compare},
  };
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--scenario", opt.scenario_path, "scenario JSON file")
        ->required();
    sub->add_option("--out", opt.out, "output path ('-' for stdout)");
    sub->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", opt.seed,
                    "override the simulation and optimizer seeds")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    sub->add_flag("--quiet", opt.quiet, "suppress progress notes");
    int (*fn)(const scenario::Scenario&, const Options&) = e.fn;
    sub->callback([&action, fn] { action = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    scenario::Scenario sc = load(opt);
    return action(sc, opt);
  } catch (const scenario::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
