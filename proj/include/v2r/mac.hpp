#pragma once
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2r/linkstate.hpp"

namespace v2r::mac {

enum class AccessMode { BasicAccess, RtsCts };

// Contention parameters of one channel. All durations are in backoff slots;
// fractional values are allowed on the analytic side.
struct MacParameters {
  int cw_min = 32;
  int cw_max = 1024;     // = 2^m * cw_min
  int m = 5;             // window doubling stops at stage m
  int retry_limit = 7;   // attempt stages 0..retry_limit-1 feed the attempt rate
  double sigma = 1.0;    // idle slot
  double t_payload = 50; // successful payload airtime T_s
  double t_overhead = 10;// per-exchange fixed overhead T_o
  double t_collision = 5;// channel hold time of a collision T_c
  AccessMode mode = AccessMode::RtsCts;
  double arrival_rate = 0;  // frames per slot; 0 means saturated
  int buffer = 1;           // queue capacity when unsaturated
};

void validate(const MacParameters& p);

struct DcfFixedPoint {
  double gamma = 0;    // conditional collision probability
  double beta_c = 0;   // attempt rate while backlogged
  double beta = 0;     // unconditional attempt rate (1 - p0) * beta_c
  double p0 = 0;       // probability of an empty queue
  double residual = 0;
  int iterations = 0;
};

// Raised when the damped iteration fails to reach tolerance.
struct FixedPointError : std::runtime_error {
  FixedPointError(const std::string& what, double gamma, double residual)
      : std::runtime_error(what), gamma(gamma), residual(residual) {}
  double gamma, residual;
};

// What one backoff slot of a tagged node looks like, given everyone else.
struct ChannelStateProbs {
  double idle = 1;
  double success = 0;    // exactly one other node transmits
  double collision = 0;
};

// Discrete payload-airtime mixture {weight, duration}; kept sorted by
// duration so collision holds (the max of two draws) fold correctly.
struct PayloadMixture {
  std::vector<double> weight;
  std::vector<double> duration;
  static PayloadMixture single(double duration_slots);
  // Flattens (class share) x (region probability) into one mixture with
  // durations frame_bits / rate.
  static PayloadMixture from_regions(const linkstate::RegionProbs& rp,
                                     std::span<const double> shares,
                                     std::span<const double> frame_bits,
                                     const std::vector<std::vector<double>>& rates);
  double mean() const;
};

// Window of backoff stage j; doubling stops at stage m, stages above the
// retry limit are invalid.
double contention_window(const MacParameters& p, int stage);

// Renewal attempt rate of a backlogged node at collision probability gamma:
// expected attempts per frame over expected backoff slots per frame.
double attempt_rate(const MacParameters& p, double gamma);

// Collision probability seen by one of n nodes when each of the others
// attempts independently at rate beta.
double gamma_of_beta(double beta, double n);

// Offered-load approximation of the empty-queue probability.
double empty_probability(const MacParameters& p, double mean_busy_service);

// Damped fixed point coupling attempt rate and collision probability.
// The mixture (payload airtime law) feeds the queue-emptiness model when
// the channel is unsaturated; the single-payload overload uses t_payload.
DcfFixedPoint solve_fixed_point(const MacParameters& p, double n);
DcfFixedPoint solve_fixed_point(const MacParameters& p, double n,
                                const PayloadMixture& mix);

// P(frame leaves after k collisions), k = 0..m+1; the last entry is the
// drop probability after m+1 straight collisions.
std::vector<double> stage_pmf(double gamma, int m);

ChannelStateProbs channel_state_probs(double beta, double n);

// Transform of the time one backoff decrement takes: an idle slot, or a
// busy period (success or collision of other nodes) plus the idle slot
// that finally decrements the counter.
double slot_pgf(const ChannelStateProbs& st, const MacParameters& p, double z);
double slot_mean(const ChannelStateProbs& st, const MacParameters& p);

// Transform of a uniform draw over {0..W_j-1}; equals 1 at z = 1 and has
// mean (W_j - 1) / 2.
double backoff_stage_pgf(const MacParameters& p, int stage, double z);

// Expected duration of a frame exchange that ends after `attempts`
// collisions (attempts = m+1 is the drop branch), including the backoff
// time of every stage passed through.
double attempt_service_slots(const MacParameters& p, const ChannelStateProbs& st,
                             int attempts);

// Full service-time law of one frame: stage mixture, per-stage backoff
// composed with the decrement-slot transform, and the mode-dependent
// attempt durations. pgf(z) and laplace(s) = pgf(e^-s) describe the same
// law; mean_slots() is its closed-form first moment.
class ServiceTimeModel {
 public:
  ServiceTimeModel(const MacParameters& p, const DcfFixedPoint& fp,
                   const ChannelStateProbs& st, PayloadMixture mix,
                   double contenders);

  double pgf(double z) const;
  double laplace(double s) const;
  double mean_slots() const;      // closed-form moment
  double pgf_mean() const;        // derivative at z = 1, by forward-mode AD

  // Backoff-only composition (stage mixture over per-stage uniform draws,
  // each decrement weighted by the slot transform).
  double backoff_pgf(double z) const;

 private:
  template <class T> T transform(T z) const;
  MacParameters p_;
  DcfFixedPoint fp_;
  ChannelStateProbs st_;
  PayloadMixture mix_;
  double n_;
  std::vector<double> dpsi_;  // collision-duration weights of the mixture
};

// Transform-family entry points mirroring ServiceTimeModel for one-shot use.
double service_time_pgf(const MacParameters& p, const DcfFixedPoint& fp,
                        const ChannelStateProbs& st, const PayloadMixture& mix,
                        double n, double z);
double laplace_service(const MacParameters& p, const DcfFixedPoint& fp,
                       const ChannelStateProbs& st, const PayloadMixture& mix,
                       double n, double s);

// Mean service time of one frame on a channel with n contenders.
double mean_service_time(const MacParameters& p, const DcfFixedPoint& fp,
                         const ChannelStateProbs& st, const PayloadMixture& mix,
                         double n);
double mean_service_time(const MacParameters& p, const DcfFixedPoint& fp,
                         const ChannelStateProbs& st,
                         const linkstate::RegionProbs& rp,
                         std::span<const double> shares,
                         std::span<const double> frame_bits,
                         const std::vector<std::vector<double>>& rates,
                         double n);

// Saturation throughput of one tagged node per class, bits per slot: frame
// bits over the renewal cycle cost (idle slots, overheads, collisions and
// everyone's payload airtime at the region-mixed rate).
std::vector<double> throughput(const MacParameters& p, const DcfFixedPoint& fp,
                               double n, std::span<const double> shares,
                               std::span<const double> frame_bits,
                               std::span<const double> mixed_rates);

}  // namespace v2r::mac
