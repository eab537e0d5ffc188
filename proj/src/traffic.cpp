#include "v2r/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace v2r::traffic {

int VehicleClass::max_count(double d) const {
  return static_cast<int>(std::floor(d / x_min));
}

void validate(const VehicleClass& vc, double d) {
  if (!(vc.lambda > 0.0))
    throw std::invalid_argument("lambda must be positive: " + vc.name);
  if (!(vc.x_min > 0.0))
    throw std::invalid_argument("x_min must be positive: " + vc.name);
  if (!(vc.frame_bits > 0.0))
    throw std::invalid_argument("frame_bits must be positive: " + vc.name);
  if (vc.zeta < 0.0)
    throw std::invalid_argument("zeta must be nonnegative: " + vc.name);
  if (vc.max_count(d) < 1)
    throw std::invalid_argument("x_min leaves no room on the road: " + vc.name);
}

double CountPmf::sum() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

double CountPmf::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) m += double(n) * probs[n];
  return m;
}

double headway_cdf(const VehicleClass& vc, double x) {
  if (x <= vc.x_min) return 0.0;
  return 1.0 - std::exp(-vc.lambda * (x - vc.x_min));
}

double nfold_cdf(const VehicleClass& vc, int n, double d) {
  if (n == 0) return d >= 0.0 ? 1.0 : 0.0;
  double u = d - double(n) * vc.x_min;
  if (u < 0.0) return 0.0;
  if (u == 0.0) return 0.0;
  // Erlang(n, lambda) survival terms summed in log domain for stability.
  double s = 0.0;
  double lu = std::log(vc.lambda * u);
  for (int j = 0; j < n; ++j)
    s += std::exp(-vc.lambda * u + double(j) * lu - std::lgamma(double(j) + 1.0));
  return 1.0 - s;
}

CountPmf count_pmf(const VehicleClass& vc, double d) {
  int omega = vc.max_count(d);
  if (omega < 1) throw std::invalid_argument("x_min leaves no room on the road");
  CountPmf pmf;
  pmf.probs.assign(std::size_t(omega), 0.0);
  double partial = 0.0;
  for (int n = 0; n < omega - 1; ++n) {
    // analytically nonnegative (the cdf is nonincreasing in n); the
    // difference of two near-equal cdf values can round below zero
    double q = nfold_cdf(vc, n, d) - nfold_cdf(vc, n + 1, d);
    pmf.probs[std::size_t(n)] = std::max(0.0, q);
    partial += pmf.probs[std::size_t(n)];
  }
  double tail = 1.0 - partial;
  if (tail < -1e-9)
    throw std::runtime_error("count pmf tail went negative; truncation broke");
  pmf.probs[std::size_t(omega - 1)] = std::max(0.0, tail);
  return pmf;
}

CountPmf joint_count_pmf(std::span<const VehicleClass> classes, double d) {
  if (classes.empty()) throw std::invalid_argument("joint count needs a class");
  CountPmf joint = count_pmf(classes[0], d);
  for (std::size_t i = 1; i < classes.size(); ++i) {
    CountPmf next = count_pmf(classes[i], d);
    std::vector<double> conv(joint.probs.size() + next.probs.size() - 1, 0.0);
    for (std::size_t a = 0; a < joint.probs.size(); ++a)
      for (std::size_t b = 0; b < next.probs.size(); ++b)
        conv[a + b] += joint.probs[a] * next.probs[b];
    joint.probs = std::move(conv);
  }
  return joint;
}

double count_weight(const VehicleClass& vc, double d, double mass) {
  CountPmf pmf = count_pmf(vc, d);
  long n = std::lround(mass);
  n = std::clamp(n, 0L, long(pmf.probs.size()) - 1L);
  return pmf.probs[std::size_t(n)];
}

double phi(std::span<const VehicleClass> classes, double d) {
  CountPmf joint = joint_count_pmf(classes, d);
  double p0 = joint.probs.empty() ? 0.0 : joint.probs[0];
  double busy = 0.0;
  for (std::size_t n = 1; n < joint.probs.size(); ++n) busy += joint.probs[n];
  if (1.0 - p0 <= 0.0) return 1.0;  // empty road: nothing to normalize
  return busy / (1.0 - p0);
}

std::vector<double> sample_positions(const VehicleClass& vc, double d,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> tail(vc.lambda);
  std::vector<double> out;
  double pos = 0.0;
  for (;;) {
    pos += vc.x_min + tail(rng);
    if (pos > d) break;
    out.push_back(pos);
  }
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  std::size_t n = std::max(p.size(), q.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = i < p.size() ? p[i] : 0.0;
    double b = i < q.size() ? q[i] : 0.0;
    tv += std::fabs(a - b);
  }
  return 0.5 * tv;
}

}  // namespace v2r::traffic
