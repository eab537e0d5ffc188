#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace v2r::traffic {

// One population of vehicles on the road segment. Successive headways are
// x_min plus an exponential tail with rate lambda, so vehicles never sit
// closer than the minimum spacing.
struct VehicleClass {
  std::string name;
  double lambda = 0.03;      // 1/m, rate of the exponential headway tail
  double x_min = 5.0;        // m, minimum spacing between vehicles
  double frame_bits = 8000;  // bits per uplink frame
  double zeta = 0.05;        // weight of service time in the game objective
  double deadline = 2e-4;    // seconds, latency budget; reporting metadata only

  // Largest number of vehicles of this class that fits on a road of length d.
  int max_count(double d) const;
};

// Throws std::invalid_argument naming the offending field.
void validate(const VehicleClass& vc, double d);

struct CountPmf {
  std::vector<double> probs;  // P(N = n) for n = 0..probs.size()-1
  double sum() const;
  double mean() const;
};

// P(headway <= x).
double headway_cdf(const VehicleClass& vc, double x);

// P(the n-th vehicle lies within distance d of the segment start); the
// n-fold headway convolution, a shifted Erlang. n = 0 yields 1 for d >= 0.
double nfold_cdf(const VehicleClass& vc, int n, double d);

// Distribution of the class count on a road of length d. The truncation
// tail beyond max_count-1 is absorbed into the last entry.
CountPmf count_pmf(const VehicleClass& vc, double d);

// Distribution of the total count over all classes (discrete convolution).
CountPmf joint_count_pmf(std::span<const VehicleClass> classes, double d);

// Count-pmf value seen by a class configured to hold `mass` vehicles,
// clamped to the pmf support.
double count_weight(const VehicleClass& vc, double d, double mass);

// Global payoff normalisation: joint pmf mass at counts >= 1 divided by the
// probability of a non-empty road. Identically 1 under the model's own
// normalisation; kept explicit so scenarios can override it.
double phi(std::span<const VehicleClass> classes, double d);

// Vehicle positions of one road realisation, ascending, all gaps >= x_min.
std::vector<double> sample_positions(const VehicleClass& vc, double d,
                                     std::uint64_t seed);

// Total variation distance between two pmfs (shorter one zero-padded).
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace v2r::traffic
