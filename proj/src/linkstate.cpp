#include "v2r/linkstate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace v2r::linkstate {

void validate(const RegionModel& m) {
  if (m.radii.empty()) throw std::invalid_argument("radii: need at least one region");
  if (!(m.d > 0.0)) throw std::invalid_argument("d must be positive");
  if (m.radii[0] > m.d)
    throw std::invalid_argument("radii: outermost radius exceeds the segment");
  for (std::size_t f = 0; f < m.radii.size(); ++f) {
    if (!(m.radii[f] > 0.0))
      throw std::invalid_argument("radii: radii must be positive");
    if (f > 0 && m.radii[f] >= m.radii[f - 1])
      throw std::invalid_argument("radii: radii must be strictly decreasing");
  }
  if (m.rates.empty()) throw std::invalid_argument("rates: need a rate row");
  for (std::size_t c = 0; c < m.rates.size(); ++c) {
    if (m.rates[c].size() != m.radii.size())
      throw std::invalid_argument("rates: row " + std::to_string(c) +
                                  " must cover every region");
    for (double r : m.rates[c])
      if (!(r > 0.0)) throw std::invalid_argument("rates: rates must be positive");
  }
}

double position_cdf(double x, double d) {
  if (x <= 0.0) return 0.0;
  if (x >= d) return 1.0;
  double r = x / d;
  return r * r * (1.0 + 2.0 * std::log(d / x));
}

RegionProbs region_probabilities(const RegionModel& m) {
  validate(m);
  RegionProbs rp;
  std::size_t nf = m.radii.size();
  rp.p.resize(nf);
  rp.coverage = position_cdf(m.radii[0], m.d);
  for (std::size_t f = 0; f < nf; ++f) {
    double outer = position_cdf(m.radii[f], m.d);
    double inner = f + 1 < nf ? position_cdf(m.radii[f + 1], m.d) : 0.0;
    rp.p[f] = outer - inner;
  }
  if (rp.coverage < 1.0) {
    for (double& p : rp.p) p /= rp.coverage;  // condition on being covered
  }
  return rp;
}

double packet_success_matrix_entry(int c_f, int u, double p_s) {
  if (c_f < 0 || u < 0) throw std::invalid_argument("counts must be nonnegative");
  if (c_f == 0) return u >= 0 ? 1.0 : 0.0;
  if (u < c_f) return 0.0;
  // Sum over window lengths c <= c_f * u; the final attempt delivers the
  // last frame, the earlier c-1 attempts hold the other c_f - 1 successes.
  double total = 0.0;
  int cmax = c_f * u;
  for (int c = c_f; c <= cmax; ++c) {
    double logterm = std::lgamma(double(c)) - std::lgamma(double(c_f)) -
                     std::lgamma(double(c - c_f + 1));
    double term = std::exp(logterm + double(c_f) * std::log(p_s) +
                           double(c - c_f) * std::log1p(-p_s));
    if (p_s >= 1.0) term = (c == c_f) ? 1.0 : 0.0;
    total += term;
  }
  return total;
}

double average_rate(std::span<const double> caps, std::span<const double> alpha,
                    std::span<const double> success) {
  if (caps.size() != alpha.size() || caps.size() != success.size())
    throw std::invalid_argument("per-region vectors must align");
  double r = 0.0;
  for (std::size_t f = 0; f < caps.size(); ++f) r += caps[f] * alpha[f] * success[f];
  return r;
}

double mixed_rate(const RegionProbs& rp, std::span<const double> rates_per_region) {
  if (rp.p.size() != rates_per_region.size())
    throw std::invalid_argument("rates must cover every region");
  double r = 0.0;
  for (std::size_t f = 0; f < rp.p.size(); ++f) r += rp.p[f] * rates_per_region[f];
  return r;
}

namespace {

double region_len(std::span<const double> frame_lens, std::size_t f) {
  if (frame_lens.empty()) throw std::invalid_argument("frame length required");
  return frame_lens.size() == 1 ? frame_lens[0] : frame_lens[f];
}

}  // namespace

double frame_time_pgf(const RegionProbs& rp, std::span<const double> frame_lens,
                      std::span<const double> rates_per_region, const Overheads& oh,
                      double z) {
  if (rates_per_region.size() != rp.p.size())
    throw std::invalid_argument("rates must cover every region");
  if (frame_lens.size() != 1 && frame_lens.size() != rp.p.size())
    throw std::invalid_argument("frame lengths must broadcast over regions");
  double fixed = oh.rts + oh.cts + 3.0 * oh.sifs;
  double s = 0.0;
  for (std::size_t f = 0; f < rp.p.size(); ++f) {
    double rate = rates_per_region[f];
    if (!(rate > 0.0)) throw std::invalid_argument("rates must be positive");
    s += rp.p[f] * std::pow(z, (region_len(frame_lens, f) + oh.ack) / rate);
  }
  return std::pow(z, fixed) * s;
}

double frame_time_mean(const RegionProbs& rp, std::span<const double> frame_lens,
                       std::span<const double> rates_per_region, const Overheads& oh) {
  if (rates_per_region.size() != rp.p.size())
    throw std::invalid_argument("rates must cover every region");
  double mean = oh.rts + oh.cts + 3.0 * oh.sifs;
  for (std::size_t f = 0; f < rp.p.size(); ++f) {
    double rate = rates_per_region[f];
    if (!(rate > 0.0)) throw std::invalid_argument("rates must be positive");
    mean += rp.p[f] * (region_len(frame_lens, f) + oh.ack) / rate;
  }
  return mean;
}

double collision_time_pgf(const Overheads& oh, double z) {
  return std::pow(z, oh.rts + oh.cts + oh.sifs);
}

double sample_position(double d, double u1, double u2) {
  return d * std::sqrt(u1 * u2);
}

}  // namespace v2r::linkstate
