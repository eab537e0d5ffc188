#include "v2r/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace v2r::sim {

namespace {

struct Sample {
  double sum = 0.0;
  double sumsq = 0.0;
  long n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return n > 0 ? sum / double(n) : 0.0; }
  double ci95() const {
    if (n < 2) return 0.0;
    double var = (sumsq - sum * sum / double(n)) / double(n - 1);
    return 1.96 * std::sqrt(std::max(var, 0.0) / double(n));
  }
};

struct Node {
  int cls = 0;
  long payload = 0;   // success airtime in whole slots
  int stage = 0;
  long counter = 0;
  long queue = 0;     // frames in system; saturated nodes pin this at 1
  long hol = 0;       // when the head-of-line frame reached the head
  bool backlogged = false;
};

struct Accum {
  long attempts = 0;
  long collisions = 0;
  long ep_idle = 0;
  long ep_success = 0;
  long ep_collision = 0;
  Sample service;
  std::vector<long> delivered;
  std::vector<long> dropped;
  std::vector<Sample> class_service;
};

long slots_of(double duration) { return long(std::ceil(duration)); }

int draw_region(const linkstate::RegionProbs& rp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng), acc = 0.0;
  for (std::size_t f = 0; f < rp.p.size(); ++f) {
    acc += rp.p[f];
    if (u <= acc) return int(f);
  }
  return int(rp.p.size()) - 1;
}

double region_rate(const std::vector<double>& row, int region) {
  return row.size() == 1 ? row[0] : row[std::size_t(region)];
}

void check_channel(const SimConfig& cfg, const ChannelSimConfig& ch) {
  mac::validate(ch.mac);
  for (const NodeGroup& g : ch.nodes) {
    if (g.count < 0) throw std::invalid_argument("node counts must be nonnegative");
    if (g.cls < 0 || std::size_t(g.cls) >= cfg.frame_bits.size())
      throw std::invalid_argument("node group class out of range");
    if (std::size_t(g.cls) >= ch.rates.size())
      throw std::invalid_argument("missing rate row for a node group class");
    const std::vector<double>& row = ch.rates[std::size_t(g.cls)];
    if (row.size() != 1 && row.size() != cfg.region_probs.p.size())
      throw std::invalid_argument("rate rows must match the region count");
    for (double r : row)
      if (r <= 0.0) throw std::invalid_argument("rates must be positive");
  }
}

// One replication of one channel. Slotted contention: zero counters fire,
// idle slots decrement everyone, busy periods freeze the counters.
void run_channel(const ChannelSimConfig& ch, const SimConfig& cfg, long warmup,
                 std::mt19937_64& rng, Accum& acc) {
  const mac::MacParameters& p = ch.mac;
  const bool saturated = p.arrival_rate <= 0.0;
  const long total = warmup + cfg.horizon;
  const long sigma = slots_of(p.sigma);
  const long overhead = slots_of(p.t_overhead);
  const long collision_hold = slots_of(p.t_collision);

  std::vector<Node> nodes;
  for (const NodeGroup& g : ch.nodes) {
    for (int k = 0; k < g.count; ++k) {
      Node nd;
      nd.cls = g.cls;
      int region = draw_region(cfg.region_probs, rng);
      nd.payload = slots_of(cfg.frame_bits[std::size_t(g.cls)] /
                            region_rate(ch.rates[std::size_t(g.cls)], region));
      nd.backlogged = saturated;
      nd.queue = saturated ? 1 : 0;
      if (nd.backlogged) {
        std::uniform_int_distribution<long> first(0, p.cw_min - 1);
        nd.counter = first(rng);
      }
      nodes.push_back(nd);
    }
  }
  if (nodes.empty()) return;

  auto new_counter = [&](Node& nd) {
    long w = (long(1) << std::min(nd.stage, p.m)) * p.cw_min;
    std::uniform_int_distribution<long> uni(0, w - 1);
    nd.counter = uni(rng);
  };
  auto arrivals = [&](long span, long now) {
    if (saturated || span <= 0) return;
    for (Node& nd : nodes) {
      std::binomial_distribution<long> bin(span, p.arrival_rate);
      long k = bin(rng);
      if (k <= 0) continue;
      nd.queue = std::min(nd.queue + k, long(p.buffer));
      if (!nd.backlogged) {
        nd.backlogged = true;
        nd.stage = 0;
        nd.hol = now;
        new_counter(nd);
      }
    }
  };
  auto finish_frame = [&](Node& nd, long now) {
    nd.stage = 0;
    if (!saturated) --nd.queue;
    if (saturated || nd.queue > 0) {
      nd.hol = now;
      new_counter(nd);
    } else {
      nd.backlogged = false;
    }
  };

  // Epoch bookkeeping for node 0: one backoff decrement, classified by the
  // first busy period of other nodes that interrupted it (if any).
  enum class Pending { None, Success, Collision };
  Pending pending = Pending::None;

  long t = 0;
  std::vector<std::size_t> tx;
  while (t < total) {
    tx.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].backlogged && nodes[i].counter == 0) tx.push_back(i);
    bool measured = t >= warmup;

    if (tx.empty()) {
      if (nodes[0].backlogged) {
        if (measured) {
          if (pending == Pending::None) ++acc.ep_idle;
          else if (pending == Pending::Success) ++acc.ep_success;
          else ++acc.ep_collision;
        }
        pending = Pending::None;
      }
      for (Node& nd : nodes)
        if (nd.backlogged) --nd.counter;
      t += sigma;
      arrivals(sigma, t);
      continue;
    }

    if (tx.size() == 1) {
      Node& nd = nodes[tx[0]];
      long dur = nd.payload + overhead;
      if (measured) {
        ++acc.attempts;
        ++acc.delivered[std::size_t(nd.cls)];
        double service = double(t + dur - nd.hol);
        acc.service.add(service);
        acc.class_service[std::size_t(nd.cls)].add(service);
      }
      t += dur;
      finish_frame(nd, t);
      if (tx[0] != 0 && nodes[0].backlogged && pending == Pending::None)
        pending = Pending::Success;
      arrivals(dur, t);
      continue;
    }

    long dur = collision_hold;
    if (p.mode == mac::AccessMode::BasicAccess) {
      long widest = 0;
      for (std::size_t i : tx) widest = std::max(widest, nodes[i].payload);
      dur = overhead + widest;
    }
    if (measured) {
      acc.attempts += long(tx.size());
      acc.collisions += long(tx.size());
    }
    t += dur;
    bool tagged = false;
    for (std::size_t i : tx) {
      Node& nd = nodes[i];
      if (i == 0) tagged = true;
      ++nd.stage;
      if (nd.stage >= p.m + 1) {
        if (measured) {
          ++acc.dropped[std::size_t(nd.cls)];
          double service = double(t - nd.hol);
          acc.service.add(service);
          acc.class_service[std::size_t(nd.cls)].add(service);
        }
        finish_frame(nd, t);
      } else {
        new_counter(nd);
      }
    }
    if (!tagged && nodes[0].backlogged && pending == Pending::None)
      pending = Pending::Collision;
    arrivals(dur, t);
  }
}

}  // namespace

SimResult run(const SimConfig& cfg) {
  if (cfg.horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (cfg.replications < 1)
    throw std::invalid_argument("replications must be at least 1");
  if (cfg.frame_bits.empty())
    throw std::invalid_argument("frame_bits must not be empty");
  if (cfg.region_probs.p.empty())
    throw std::invalid_argument("region probabilities must not be empty");
  double psum = 0.0;
  for (double v : cfg.region_probs.p) {
    if (v < 0.0) throw std::invalid_argument("region probabilities must be nonnegative");
    psum += v;
  }
  if (std::fabs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("region probabilities must sum to one");
  for (const ChannelSimConfig& ch : cfg.channels) check_channel(cfg, ch);
  long warmup = cfg.warmup >= 0 ? cfg.warmup : cfg.horizon / 10;

  SimResult res;
  std::size_t classes = cfg.frame_bits.size();
  for (std::size_t c = 0; c < cfg.channels.size(); ++c) {
    const ChannelSimConfig& ch = cfg.channels[c];
    Accum acc;
    acc.delivered.assign(classes, 0);
    acc.dropped.assign(classes, 0);
    acc.class_service.assign(classes, Sample{});
    for (int rep = 0; rep < cfg.replications; ++rep) {
      std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32),
                        std::uint32_t(rep), std::uint32_t(c)};
      std::mt19937_64 rng(seq);
      run_channel(ch, cfg, warmup, rng, acc);
    }

    ChannelStats stats;
    stats.id = ch.id;
    long epochs = acc.ep_idle + acc.ep_success + acc.ep_collision;
    if (epochs > 0) {
      stats.freq_idle = double(acc.ep_idle) / double(epochs);
      stats.freq_success = double(acc.ep_success) / double(epochs);
      stats.freq_collision = double(acc.ep_collision) / double(epochs);
    }
    stats.attempts = acc.attempts;
    stats.collisions = acc.collisions;
    stats.collision_rate =
        acc.attempts > 0 ? double(acc.collisions) / double(acc.attempts) : 0.0;
    stats.mean_service = acc.service.mean();
    stats.ci_service = acc.service.ci95();

    double measured = double(cfg.horizon) * double(cfg.replications);
    long node_total = 0;
    std::vector<long> counts(classes, 0);
    for (const NodeGroup& g : ch.nodes) {
      counts[std::size_t(g.cls)] += g.count;
      node_total += g.count;
    }
    double bits_total = 0.0;
    stats.per_class.resize(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      ClassStats& cs = stats.per_class[k];
      cs.delivered = acc.delivered[k];
      cs.dropped = acc.dropped[k];
      double bits = double(acc.delivered[k]) * cfg.frame_bits[k];
      bits_total += bits;
      if (counts[k] > 0) cs.throughput = bits / (measured * double(counts[k]));
      cs.mean_service = acc.class_service[k].mean();
      cs.ci_service = acc.class_service[k].ci95();
    }
    if (node_total > 0)
      stats.node_throughput = bits_total / (measured * double(node_total));
    res.channels.push_back(std::move(stats));
  }
  return res;
}

CompareReport compare_with_analytic(const SimConfig& cfg,
                                    const CompareBounds& bounds) {
  SimResult sr = run(cfg);
  CompareReport rep;
  std::size_t classes = cfg.frame_bits.size();

  for (std::size_t c = 0; c < cfg.channels.size(); ++c) {
    const ChannelSimConfig& ch = cfg.channels[c];
    const ChannelStats& sim = sr.channels[c];
    std::vector<double> counts(classes, 0.0);
    double n = 0.0;
    for (const NodeGroup& g : ch.nodes) {
      counts[std::size_t(g.cls)] += g.count;
      n += g.count;
    }
    if (n <= 0.0) continue;
    std::vector<double> shares(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) shares[k] = counts[k] / n;

    mac::PayloadMixture mix = mac::PayloadMixture::from_regions(
        cfg.region_probs, shares, cfg.frame_bits, ch.rates);
    mac::DcfFixedPoint fp = mac::solve_fixed_point(ch.mac, n, mix);
    mac::ChannelStateProbs st = mac::channel_state_probs(fp.beta, n);

    auto push = [&](const std::string& metric, double analytic, double simulated,
                    double bound, bool relative) {
      CompareRow row;
      row.channel = ch.id;
      row.metric = metric;
      row.analytic = analytic;
      row.simulated = simulated;
      double diff = std::fabs(analytic - simulated);
      row.error = relative && std::fabs(simulated) > 0.0
                      ? diff / std::fabs(simulated)
                      : diff;
      row.bound = bound;
      row.relative = relative;
      row.ok = row.error <= bound;
      rep.all_ok = rep.all_ok && row.ok;
      rep.rows.push_back(std::move(row));
    };

    push("collision_rate", fp.gamma, sim.collision_rate, bounds.collision_rel,
         true);

    // Region-mixed effective rate per class: frame bits over mean airtime.
    std::vector<double> mixed_rates(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      double airtime = 0.0;
      for (std::size_t f = 0; f < cfg.region_probs.p.size(); ++f) {
        double rate = region_rate(ch.rates.size() > k ? ch.rates[k]
                                                      : ch.rates.back(),
                                  int(f));
        airtime += cfg.region_probs.p[f] * cfg.frame_bits[k] / rate;
      }
      mixed_rates[k] = cfg.frame_bits[k] / airtime;
    }
    std::vector<double> th;
    if (ch.mac.arrival_rate <= 0.0)
      th = mac::throughput(ch.mac, fp, n, shares, cfg.frame_bits, mixed_rates);
    bool single = true;
    int present = 0;
    for (std::size_t k = 0; k < classes; ++k)
      if (counts[k] > 0) ++present;
    single = present <= 1;
    for (std::size_t k = 0; k < classes; ++k) {
      if (counts[k] <= 0) continue;
      double analytic = ch.mac.arrival_rate > 0.0
                            ? ch.mac.arrival_rate * cfg.frame_bits[k]
                            : th[k];
      std::string metric =
          single ? "throughput" : "throughput[" + std::to_string(k) + "]";
      push(metric, analytic, sim.per_class[k].throughput,
           bounds.throughput_rel, true);
    }

    double service = mac::mean_service_time(ch.mac, fp, st, mix, n);
    push("mean_service", service, sim.mean_service, bounds.service_rel, true);
    push("freq_idle", st.idle, sim.freq_idle, bounds.slot_freq_abs, false);
    push("freq_success", st.success, sim.freq_success, bounds.slot_freq_abs,
         false);
    push("freq_collision", st.collision, sim.freq_collision,
         bounds.slot_freq_abs, false);
  }
  return rep;
}

}  // namespace v2r::sim
