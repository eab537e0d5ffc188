#pragma once
#include <span>
#include <vector>

namespace v2r::linkstate {

// Fixed MAC exchange overheads. rts/cts/sifs are durations in backoff
// slots; ack is a frame length in bits, sent at the payload rate.
struct Overheads {
  double rts = 0;
  double cts = 0;
  double sifs = 0;
  double ack = 0;
};

// Concentric link-quality regions around the roadside unit. radii are
// strictly decreasing with radii[0] <= d; region f covers distances in
// (radii[f+1], radii[f]], the innermost reaching down to zero.
struct RegionModel {
  std::vector<double> radii;
  std::vector<std::vector<double>> rates;  // [class][region] bits/slot; one row = shared by all classes
  double d = 1200.0;
};

void validate(const RegionModel& m);

struct RegionProbs {
  std::vector<double> p;  // occupancy probability per region, sums to 1
  double coverage = 1.0;  // raw probability inside radii[0] before renormalisation
};

// P(distance to the roadside unit <= x) for a vehicle placed on the segment.
double position_cdf(double x, double d);

RegionProbs region_probabilities(const RegionModel& m);

// Probability that c_f frames are delivered within a window of at most
// c_f * u attempts when each attempt succeeds with probability p_s
// (the last attempt of the window carries the final delivery).
double packet_success_matrix_entry(int c_f, int u, double p_s);

// Rate folded over regions: sum_f caps[f] * alpha[f] * success[f].
double average_rate(std::span<const double> caps, std::span<const double> alpha,
                    std::span<const double> success);

// sum_f P_f * rates[f].
double mixed_rate(const RegionProbs& rp, std::span<const double> rates_per_region);

// Transform of one successful frame exchange: fixed handshake overhead plus
// the region-dependent payload-and-ack airtime. Exponents are real, so
// fractional slot counts are fine. Equals 1 at z = 1.
double frame_time_pgf(const RegionProbs& rp, std::span<const double> frame_lens,
                      std::span<const double> rates_per_region, const Overheads& oh,
                      double z);
double frame_time_mean(const RegionProbs& rp, std::span<const double> frame_lens,
                       std::span<const double> rates_per_region, const Overheads& oh);

// Transform of the channel hold time of a handshake collision.
double collision_time_pgf(const Overheads& oh, double z);

// Draws from the distance law behind position_cdf using two independent
// uniforms; used as the Monte Carlo oracle for region occupancy.
double sample_position(double d, double u1, double u2);

}  // namespace v2r::linkstate
