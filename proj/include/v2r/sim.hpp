#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "v2r/linkstate.hpp"
#include "v2r/mac.hpp"

namespace v2r::sim {

struct NodeGroup {
  int cls = 0;    // class index into frame_bits / rates rows
  int count = 0;
};

struct ChannelSimConfig {
  std::string id;
  mac::MacParameters mac;
  std::vector<NodeGroup> nodes;
  std::vector<std::vector<double>> rates;  // [class][region] bits per slot
};

struct SimConfig {
  std::vector<ChannelSimConfig> channels;
  linkstate::RegionProbs region_probs;
  std::vector<double> frame_bits;  // per class
  long horizon = 1100000;          // slots counted after warmup
  long warmup = -1;                // negative: 10% of horizon
  int replications = 1;
  std::uint64_t seed = 1;
};

struct ClassStats {
  long delivered = 0;
  long dropped = 0;
  double throughput = 0;        // bits per slot per node of the class
  double mean_service = 0;      // slots from head-of-line to departure
  double ci_service = 0;        // 95% halfwidth
};

struct ChannelStats {
  std::string id;
  // Tagged-node backoff-decrement epochs by what ended them.
  double freq_idle = 0;
  double freq_success = 0;
  double freq_collision = 0;
  double collision_rate = 0;    // collided attempts over attempts
  long attempts = 0;
  long collisions = 0;
  double mean_service = 0;
  double ci_service = 0;
  double node_throughput = 0;   // bits per slot per node
  std::vector<ClassStats> per_class;
};

struct SimResult {
  std::vector<ChannelStats> channels;
};

// Slotted contention simulator: every node carries a backoff counter that
// freezes during busy periods; simultaneous zero counters collide, double
// the window up to the cap, and drop the frame past the retry limit.
SimResult run(const SimConfig& cfg);

// Analytic model vs simulation on the same configuration.
struct CompareBounds {
  double collision_rel = 0.05;
  double throughput_rel = 0.08;
  double service_rel = 0.08;
  double slot_freq_abs = 0.03;
};

struct CompareRow {
  std::string channel;
  std::string metric;
  double analytic = 0;
  double simulated = 0;
  double error = 0;      // relative or absolute, per `relative`
  double bound = 0;
  bool relative = true;
  bool ok = true;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  bool all_ok = true;
};

CompareReport compare_with_analytic(const SimConfig& cfg,
                                    const CompareBounds& bounds = {});

}  // namespace v2r::sim
