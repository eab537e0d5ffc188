#include "v2r/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace v2r::scenario {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ScenarioError(field, why);
}

const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& require(const json& j, const std::string& path, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(path.empty() ? key : path + "." + key, "missing field");
  return *v;
}

std::string join_path(const std::string& base, const char* key) {
  return base.empty() ? key : base + "." + key;
}

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double get_num(const json& j, const std::string& base, const char* key, double def) {
  const json* v = find(j, key);
  return v ? as_num(*v, join_path(base, key)) : def;
}

long as_long(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

long get_long(const json& j, const std::string& base, const char* key, long def) {
  const json* v = find(j, key);
  return v ? as_long(*v, join_path(base, key)) : def;
}

int get_int(const json& j, const std::string& base, const char* key, int def) {
  return static_cast<int>(get_long(j, base, key, def));
}

std::uint64_t get_u64(const json& j, const std::string& base, const char* key,
                      std::uint64_t def) {
  const json* v = find(j, key);
  if (!v) return def;
  std::string path = join_path(base, key);
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer()) {
    auto s = v->get<std::int64_t>();
    if (s >= 0) return static_cast<std::uint64_t>(s);
  }
  fail(path, "expected a nonnegative integer");
}

std::string get_str(const json& j, const std::string& base, const char* key,
                    std::string def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_string()) fail(join_path(base, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> as_num_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_num(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of rows");
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_num_array(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

mac::MacParameters parse_mac(const json& jm, const std::string& base) {
  if (!jm.is_object()) fail(base, "expected an object");
  mac::MacParameters p;
  p.cw_min = get_int(jm, base, "cw_min", p.cw_min);
  p.cw_max = get_int(jm, base, "cw_max", p.cw_max);
  p.m = get_int(jm, base, "m", p.m);
  p.retry_limit = get_int(jm, base, "retry_limit", p.retry_limit);
  p.sigma = get_num(jm, base, "sigma", p.sigma);
  p.t_payload = get_num(jm, base, "t_payload", p.t_payload);
  p.t_overhead = get_num(jm, base, "t_overhead", p.t_overhead);
  p.t_collision = get_num(jm, base, "t_collision", p.t_collision);
  p.arrival_rate = get_num(jm, base, "arrival_rate", p.arrival_rate);
  p.buffer = get_int(jm, base, "buffer", p.buffer);
  std::string mode = get_str(jm, base, "mode", "rts");
  if (mode == "rts") {
    p.mode = mac::AccessMode::RtsCts;
  } else if (mode == "basic") {
    p.mode = mac::AccessMode::BasicAccess;
  } else {
    fail(base + ".mode", "unknown access mode '" + mode + "' (use rts or basic)");
  }
  try {
    mac::validate(p);
  } catch (const std::invalid_argument& e) {
    fail(base, e.what());
  }
  return p;
}

game::BnnConfig parse_bnn(const json& jb, const std::string& base) {
  if (!jb.is_object()) fail(base, "expected an object");
  game::BnnConfig cfg;
  cfg.h = get_num(jb, base, "h", cfg.h);
  cfg.eps = get_num(jb, base, "eps", cfg.eps);
  cfg.max_steps = get_long(jb, base, "max_steps", cfg.max_steps);
  cfg.record_every = get_long(jb, base, "record_every", cfg.record_every);
  if (!(cfg.h > 0.0)) fail(base + ".h", "step size must be positive");
  if (!(cfg.eps > 0.0)) fail(base + ".eps", "tolerance must be positive");
  if (cfg.max_steps < 1) fail(base + ".max_steps", "need at least one step");
  if (cfg.record_every < 0) fail(base + ".record_every", "must be nonnegative");
  return cfg;
}

// Per-channel rates resolve to one explicit [class][region] matrix: an
// explicit "rates" key wins, otherwise the shared region rates scaled by
// rate_scale; single rows broadcast across classes.
std::vector<std::vector<double>> resolve_rates(
    const std::vector<std::vector<double>>& base_rates, double scale,
    std::size_t classes, std::size_t regions, const std::string& path) {
  if (base_rates.empty())
    fail(path, "no rates given and regions.rates is missing");
  if (base_rates.size() != 1 && base_rates.size() != classes)
    fail(path, "need one rate row per vehicle class (or a single shared row)");
  std::vector<std::vector<double>> out(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const std::vector<double>& row =
        base_rates.size() == 1 ? base_rates[0] : base_rates[c];
    if (row.size() != regions)
      fail(path, "row " + std::to_string(base_rates.size() == 1 ? 0 : c) +
                     " must list a rate for each of the " +
                     std::to_string(regions) + " regions");
    out[c].resize(regions);
    for (std::size_t f = 0; f < regions; ++f) {
      double r = row[f] * scale;
      if (!(r > 0.0)) fail(path, "rates must be positive");
      out[c][f] = r;
    }
  }
  return out;
}

ordered bnn_to_json(const game::BnnConfig& cfg) {
  ordered j;
  j["h"] = cfg.h;
  j["eps"] = cfg.eps;
  j["max_steps"] = cfg.max_steps;
  j["record_every"] = cfg.record_every;
  return j;
}

linkstate::RegionModel region_model_of(const Scenario& sc) {
  linkstate::RegionModel m = sc.regions;
  m.d = sc.d;
  // Channels may carry the only explicit rates; any valid row satisfies the
  // model check, the probabilities depend on the radii alone.
  if (m.rates.empty() && !sc.channels.empty()) m.rates = sc.channels[0].rates;
  return m;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail("json", e.what());
  }
  if (!doc.is_object()) fail("json", "top level must be an object");

  Scenario sc;
  sc.name = get_str(doc, "", "name", "");
  sc.phi = get_num(doc, "", "phi", -1.0);

  const json& road = require(doc, "", "road");
  sc.d = get_num(road, "road", "d", sc.d);
  if (!(sc.d > 0.0)) fail("road.d", "coverage length must be positive");
  sc.v_max = get_num(road, "road", "v_max", 0.0);
  sc.v_min = get_num(road, "road", "v_min", 0.0);

  const json& jclasses = require(road, "road", "classes");
  if (!jclasses.is_array() || jclasses.empty())
    fail("road.classes", "need at least one vehicle class");
  for (std::size_t c = 0; c < jclasses.size(); ++c) {
    std::string base = "road.classes[" + std::to_string(c) + "]";
    const json& jc = jclasses[c];
    if (!jc.is_object()) fail(base, "expected an object");
    traffic::VehicleClass vc;
    vc.name = get_str(jc, base, "name", "class" + std::to_string(c));
    vc.lambda = get_num(jc, base, "lambda", vc.lambda);
    vc.x_min = get_num(jc, base, "x_min", vc.x_min);
    vc.frame_bits = get_num(jc, base, "frame_bits", vc.frame_bits);
    vc.deadline = get_num(jc, base, "deadline", vc.deadline);
    try {
      traffic::validate(vc, sc.d);
    } catch (const std::invalid_argument& e) {
      fail(base, e.what());
    }
    sc.classes.push_back(std::move(vc));
  }
  std::size_t num_classes = sc.classes.size();

  const json& jregions = require(doc, "", "regions");
  sc.regions.d = sc.d;
  sc.regions.radii = as_num_array(require(jregions, "regions", "radii"),
                                  "regions.radii");
  if (sc.regions.radii.empty()) fail("regions.radii", "need at least one region");
  if (sc.regions.radii[0] > sc.d)
    fail("regions.radii", "outermost radius exceeds the road length");
  for (std::size_t f = 0; f < sc.regions.radii.size(); ++f) {
    if (!(sc.regions.radii[f] > 0.0))
      fail("regions.radii", "radii must be positive");
    if (f > 0 && sc.regions.radii[f] >= sc.regions.radii[f - 1])
      fail("regions.radii", "radii must be strictly decreasing");
  }
  std::size_t num_regions = sc.regions.radii.size();
  if (const json* jr = find(jregions, "rates")) {
    sc.regions.rates = as_matrix(*jr, "regions.rates");
    if (!sc.regions.rates.empty() && sc.regions.rates.size() != 1 &&
        sc.regions.rates.size() != num_classes)
      fail("regions.rates", "need one row per vehicle class or a single shared row");
    for (std::size_t c = 0; c < sc.regions.rates.size(); ++c) {
      if (sc.regions.rates[c].size() != num_regions)
        fail("regions.rates", "row " + std::to_string(c) +
                                  " must cover every region");
      for (double r : sc.regions.rates[c])
        if (!(r > 0.0)) fail("regions.rates", "rates must be positive");
    }
  }

  const json& jchannels = require(doc, "", "channels");
  if (!jchannels.is_array() || jchannels.empty())
    fail("channels", "need at least one channel");
  for (std::size_t l = 0; l < jchannels.size(); ++l) {
    std::string base = "channels[" + std::to_string(l) + "]";
    const json& jch = jchannels[l];
    if (!jch.is_object()) fail(base, "expected an object");
    game::ChannelSpec spec;
    spec.id = get_str(jch, base, "id", "ch" + std::to_string(l));
    spec.mac = parse_mac(require(jch, base, "mac"), base + ".mac");
    double scale = get_num(jch, base, "rate_scale", 1.0);
    if (!(scale > 0.0)) fail(base + ".rate_scale", "scale must be positive");
    if (const json* jr = find(jch, "rates")) {
      spec.rates = resolve_rates(as_matrix(*jr, base + ".rates"), 1.0,
                                 num_classes, num_regions, base + ".rates");
    } else {
      spec.rates = resolve_rates(sc.regions.rates, scale, num_classes,
                                 num_regions, base + ".rates");
    }
    sc.channels.push_back(std::move(spec));
  }
  std::size_t num_channels = sc.channels.size();

  if (const json* jg = find(doc, "game")) {
    if (const json* jz = find(*jg, "zeta")) {
      std::vector<double> zeta = as_num_array(*jz, "game.zeta");
      if (zeta.size() != num_classes)
        fail("game.zeta", "expected one entry per vehicle class (" +
                              std::to_string(num_classes) + ")");
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (zeta[c] < 0.0) fail("game.zeta", "weights must be nonnegative");
        sc.classes[c].zeta = zeta[c];
      }
    }
    if (const json* jm = find(*jg, "masses")) {
      sc.game.masses = as_num_array(*jm, "game.masses");
      if (!sc.game.masses.empty()) {
        if (sc.game.masses.size() != num_classes)
          fail("game.masses", "expected one entry per vehicle class (" +
                                  std::to_string(num_classes) + ")");
        for (double m : sc.game.masses)
          if (!(m > 0.0)) fail("game.masses", "masses must be positive");
      }
    }
    if (const json* jb = find(*jg, "bnn")) sc.game.bnn = parse_bnn(*jb, "game.bnn");
    if (const json* jo = find(*jg, "optimizer")) {
      std::string base = "game.optimizer";
      sc.game.ascent.starts = get_int(*jo, base, "starts", sc.game.ascent.starts);
      sc.game.ascent.seed = get_u64(*jo, base, "seed", sc.game.ascent.seed);
      sc.game.ascent.max_iters =
          get_long(*jo, base, "max_iters", sc.game.ascent.max_iters);
      sc.game.ascent.step0 = get_num(*jo, base, "step0", sc.game.ascent.step0);
      sc.game.ascent.tol = get_num(*jo, base, "tol", sc.game.ascent.tol);
      if (sc.game.ascent.starts < 1) fail(base + ".starts", "need at least one start");
      if (sc.game.ascent.max_iters < 1) fail(base + ".max_iters", "need at least one iteration");
      if (!(sc.game.ascent.step0 > 0.0)) fail(base + ".step0", "must be positive");
      if (!(sc.game.ascent.tol > 0.0)) fail(base + ".tol", "must be positive");
    }
    if (const json* ja = find(*jg, "available")) {
      std::vector<std::vector<double>> av = as_matrix(*ja, "game.available");
      if (!av.empty()) {
        if (av.size() != num_classes)
          fail("game.available", "need one row per vehicle class");
        sc.game.available.resize(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) {
          if (av[c].size() != num_channels)
            fail("game.available", "row " + std::to_string(c) +
                                       " must cover every channel");
          for (double v : av[c]) {
            if (v != 0.0 && v != 1.0)
              fail("game.available", "entries must be 0 or 1");
            sc.game.available[c].push_back(v != 0.0 ? 1 : 0);
          }
        }
      }
    }
    sc.game.eps_mass = get_num(*jg, "game", "eps_mass", sc.game.eps_mass);
    if (!(sc.game.eps_mass >= 0.0)) fail("game.eps_mass", "must be nonnegative");
  }

  if (const json* jp = find(doc, "pricing")) {
    if (const json* jgr = find(*jp, "grid")) {
      sc.pricing.grid = as_matrix(*jgr, "pricing.grid");
      if (!sc.pricing.grid.empty()) {
        if (sc.pricing.grid.size() != num_classes)
          fail("pricing.grid", "need one price row per vehicle class");
        for (std::size_t c = 0; c < num_classes; ++c) {
          if (sc.pricing.grid[c].empty())
            fail("pricing.grid", "row " + std::to_string(c) +
                                     " needs at least one price");
          for (double p : sc.pricing.grid[c])
            if (p < 0.0) fail("pricing.grid", "prices must be nonnegative");
        }
      }
    }
    if (const json* jb = find(*jp, "bnn")) {
      sc.pricing.bnn = parse_bnn(*jb, "pricing.bnn");
      sc.pricing.own_bnn = true;
    }
  }

  if (const json* js = find(doc, "sim")) {
    sc.sim.horizon = get_long(*js, "sim", "horizon", sc.sim.horizon);
    if (sc.sim.horizon < 1) fail("sim.horizon", "must be positive");
    sc.sim.warmup = get_long(*js, "sim", "warmup", sc.sim.warmup);
    sc.sim.replications = get_int(*js, "sim", "replications", sc.sim.replications);
    if (sc.sim.replications < 1) fail("sim.replications", "need at least one replication");
    sc.sim.seed = get_u64(*js, "sim", "seed", sc.sim.seed);
    if (const json* jn = find(*js, "nodes")) {
      std::vector<std::vector<double>> nodes = as_matrix(*jn, "sim.nodes");
      if (!nodes.empty()) {
        if (nodes.size() != num_channels)
          fail("sim.nodes", "need one row per channel");
        sc.sim.nodes.resize(num_channels);
        for (std::size_t l = 0; l < num_channels; ++l) {
          if (nodes[l].size() != num_classes)
            fail("sim.nodes", "row " + std::to_string(l) +
                                  " must cover every vehicle class");
          for (double v : nodes[l]) {
            if (v < 0.0 || v != std::floor(v))
              fail("sim.nodes", "counts must be nonnegative integers");
            sc.sim.nodes[l].push_back(static_cast<int>(v));
          }
        }
      }
    }
  }

  if (const json* jb = find(doc, "bounds")) {
    sc.bounds.collision_rel =
        get_num(*jb, "bounds", "collision_rel", sc.bounds.collision_rel);
    sc.bounds.throughput_rel =
        get_num(*jb, "bounds", "throughput_rel", sc.bounds.throughput_rel);
    sc.bounds.service_rel =
        get_num(*jb, "bounds", "service_rel", sc.bounds.service_rel);
    sc.bounds.slot_freq_abs =
        get_num(*jb, "bounds", "slot_freq_abs", sc.bounds.slot_freq_abs);
    if (!(sc.bounds.collision_rel > 0.0 && sc.bounds.throughput_rel > 0.0 &&
          sc.bounds.service_rel > 0.0 && sc.bounds.slot_freq_abs > 0.0))
      fail("bounds", "tolerances must be positive");
  }

  if (const json* js = find(doc, "sweep")) {
    if (const json* jl = find(*js, "lambda")) {
      sc.sweep.lambda = as_num_array(*jl, "sweep.lambda");
      for (double l : sc.sweep.lambda)
        if (!(l > 0.0)) fail("sweep.lambda", "densities must be positive");
    }
    sc.sweep.cls = get_int(*js, "sweep", "cls", sc.sweep.cls);
    if (sc.sweep.cls < 0 || std::size_t(sc.sweep.cls) >= num_classes)
      fail("sweep.cls", "class index out of range");
  }

  if (const json* jo = find(doc, "output")) {
    sc.output.format = get_str(*jo, "output", "format", sc.output.format);
    if (sc.output.format != "csv" && sc.output.format != "json")
      fail("output.format", "unknown format '" + sc.output.format +
                                "' (use csv or json)");
    sc.output.path = get_str(*jo, "output", "path", sc.output.path);
    if (sc.output.path.empty()) fail("output.path", "must not be empty");
  }

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("path", "cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& sc) {
  ordered doc;
  doc["name"] = sc.name;

  ordered road;
  road["d"] = sc.d;
  road["v_max"] = sc.v_max;
  road["v_min"] = sc.v_min;
  ordered jclasses = ordered::array();
  for (const traffic::VehicleClass& vc : sc.classes) {
    ordered jc;
    jc["name"] = vc.name;
    jc["lambda"] = vc.lambda;
    jc["x_min"] = vc.x_min;
    jc["frame_bits"] = vc.frame_bits;
    jc["deadline"] = vc.deadline;
    jclasses.push_back(std::move(jc));
  }
  road["classes"] = std::move(jclasses);
  doc["road"] = std::move(road);

  ordered regions;
  regions["radii"] = sc.regions.radii;
  regions["rates"] = sc.regions.rates;
  doc["regions"] = std::move(regions);

  ordered jchannels = ordered::array();
  for (const game::ChannelSpec& ch : sc.channels) {
    ordered jch;
    jch["id"] = ch.id;
    ordered jm;
    jm["cw_min"] = ch.mac.cw_min;
    jm["cw_max"] = ch.mac.cw_max;
    jm["m"] = ch.mac.m;
    jm["retry_limit"] = ch.mac.retry_limit;
    jm["sigma"] = ch.mac.sigma;
    jm["t_payload"] = ch.mac.t_payload;
    jm["t_overhead"] = ch.mac.t_overhead;
    jm["t_collision"] = ch.mac.t_collision;
    jm["mode"] = ch.mac.mode == mac::AccessMode::RtsCts ? "rts" : "basic";
    jm["arrival_rate"] = ch.mac.arrival_rate;
    jm["buffer"] = ch.mac.buffer;
    jch["mac"] = std::move(jm);
    jch["rates"] = ch.rates;  // resolved, so rate_scale never reappears
    jchannels.push_back(std::move(jch));
  }
  doc["channels"] = std::move(jchannels);

  doc["phi"] = sc.phi;

  ordered jg;
  std::vector<double> zeta;
  for (const traffic::VehicleClass& vc : sc.classes) zeta.push_back(vc.zeta);
  jg["zeta"] = zeta;
  jg["masses"] = sc.game.masses;
  jg["bnn"] = bnn_to_json(sc.game.bnn);
  ordered jo;
  jo["starts"] = sc.game.ascent.starts;
  jo["seed"] = sc.game.ascent.seed;
  jo["max_iters"] = sc.game.ascent.max_iters;
  jo["step0"] = sc.game.ascent.step0;
  jo["tol"] = sc.game.ascent.tol;
  jg["optimizer"] = std::move(jo);
  if (!sc.game.available.empty()) {
    ordered ja = ordered::array();
    for (const auto& row : sc.game.available) {
      ordered jr = ordered::array();
      for (std::uint8_t v : row) jr.push_back(int(v));
      ja.push_back(std::move(jr));
    }
    jg["available"] = std::move(ja);
  }
  jg["eps_mass"] = sc.game.eps_mass;
  doc["game"] = std::move(jg);

  ordered jp;
  jp["grid"] = sc.pricing.grid;
  if (sc.pricing.own_bnn) jp["bnn"] = bnn_to_json(sc.pricing.bnn);
  doc["pricing"] = std::move(jp);

  ordered js;
  js["horizon"] = sc.sim.horizon;
  js["warmup"] = sc.sim.warmup;
  js["replications"] = sc.sim.replications;
  js["seed"] = sc.sim.seed;
  js["nodes"] = sc.sim.nodes;
  doc["sim"] = std::move(js);

  ordered jb;
  jb["collision_rel"] = sc.bounds.collision_rel;
  jb["throughput_rel"] = sc.bounds.throughput_rel;
  jb["service_rel"] = sc.bounds.service_rel;
  jb["slot_freq_abs"] = sc.bounds.slot_freq_abs;
  doc["bounds"] = std::move(jb);

  ordered jw;
  jw["lambda"] = sc.sweep.lambda;
  jw["cls"] = sc.sweep.cls;
  doc["sweep"] = std::move(jw);

  ordered jout;
  jout["format"] = sc.output.format;
  jout["path"] = sc.output.path;
  doc["output"] = std::move(jout);

  return doc.dump(2) + "\n";
}

std::vector<double> class_masses(const Scenario& sc) {
  if (!sc.game.masses.empty()) return sc.game.masses;
  std::vector<double> masses;
  masses.reserve(sc.classes.size());
  for (const traffic::VehicleClass& vc : sc.classes)
    masses.push_back(traffic::count_pmf(vc, sc.d).mean());
  return masses;
}

game::GameProblem build_game(const Scenario& sc) {
  return build_game(sc, game::uniform_state(class_masses(sc), sc.channels.size()));
}

game::GameProblem build_game(const Scenario& sc, const game::GameState& reference) {
  std::vector<double> masses = class_masses(sc);
  std::vector<game::ClassTraits> traits;
  traits.reserve(sc.classes.size());
  for (std::size_t c = 0; c < sc.classes.size(); ++c) {
    const traffic::VehicleClass& vc = sc.classes[c];
    game::ClassTraits t;
    t.name = vc.name;
    t.mass = masses[c];
    t.frame_bits = vc.frame_bits;
    t.zeta = vc.zeta;
    t.weight = traffic::count_weight(vc, sc.d, masses[c]);
    traits.push_back(std::move(t));
  }
  double phi = sc.phi < 0.0 ? traffic::phi(sc.classes, sc.d) : sc.phi;
  return game::build_problem(traits, sc.channels,
                             linkstate::region_probabilities(region_model_of(sc)),
                             reference, phi, sc.game.available);
}

sim::SimConfig build_sim(const Scenario& sc) {
  sim::SimConfig cfg;
  cfg.region_probs = linkstate::region_probabilities(region_model_of(sc));
  for (const traffic::VehicleClass& vc : sc.classes)
    cfg.frame_bits.push_back(vc.frame_bits);
  cfg.horizon = sc.sim.horizon;
  cfg.warmup = sc.sim.warmup;
  cfg.replications = sc.sim.replications;
  cfg.seed = sc.sim.seed;

  std::vector<int> fallback;
  if (sc.sim.nodes.empty()) {
    std::vector<double> masses = class_masses(sc);
    for (double m : masses)
      fallback.push_back(int(std::lround(m / double(sc.channels.size()))));
  }
  for (std::size_t l = 0; l < sc.channels.size(); ++l) {
    sim::ChannelSimConfig ch;
    ch.id = sc.channels[l].id;
    ch.mac = sc.channels[l].mac;
    ch.rates = sc.channels[l].rates;
    const std::vector<int>& counts = sc.sim.nodes.empty() ? fallback : sc.sim.nodes[l];
    for (std::size_t c = 0; c < counts.size(); ++c)
      ch.nodes.push_back({int(c), counts[c]});
    cfg.channels.push_back(std::move(ch));
  }
  return cfg;
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size())
    throw std::invalid_argument("row has " + std::to_string(cells.size()) +
                                " cells but the table has " +
                                std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(cells));
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  return json(v).dump();  // shortest representation that round-trips exactly
}

namespace {
std::string join_cells(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}
}  // namespace

std::string to_csv(const Table& t) {
  std::string out = "# schema=1\n";
  out += join_cells(t.columns);
  out += '\n';
  for (const auto& row : t.rows) {
    out += join_cells(row);
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& t) {
  ordered j;
  j["schema"] = 1;
  j["columns"] = t.columns;
  j["rows"] = t.rows;
  return j.dump(2) + "\n";
}

std::string render(const Table& t, const std::string& format) {
  if (format == "csv") return to_csv(t);
  if (format == "json") return to_json(t);
  fail("output.format", "unknown format '" + format + "' (use csv or json)");
}

void write_output(const Table& t, const OutputSettings& out) {
  std::string text = render(t, out.format);
  if (out.path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out.path);
  if (!f) fail("output.path", "cannot open '" + out.path + "' for writing");
  f << text;
  if (!f) fail("output.path", "failed writing '" + out.path + "'");
}

}  // namespace v2r::scenario
