#include "v2r/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace v2r::mac {

namespace {

// Forward-mode dual number: carries f and df through the transform so the
// pgf derivative at z = 1 needs no finite differencing.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

inline double pow_t(double z, double c) { return std::pow(z, c); }
inline Dual pow_t(Dual z, double c) {
  return {std::pow(z.v, c), c * std::pow(z.v, c - 1.0) * z.d};
}

// (1/W) * sum_{u<W} y^u, evaluated incrementally so y = 1 is exact.
template <class T>
T uniform_pgf(T y, int w) {
  T acc(1.0), sum(1.0);
  for (int u = 1; u < w; ++u) {
    acc = acc * y;
    sum = sum + acc;
  }
  return sum / T(double(w));
}

double clamped_exponent(double n) { return std::max(n - 1.0, 0.0); }

}  // namespace

void validate(const MacParameters& p) {
  if (p.cw_min < 1) throw std::invalid_argument("cw_min must be at least 1");
  if (p.m < 0) throw std::invalid_argument("m must be nonnegative");
  if (p.cw_max != (p.cw_min << p.m))
    throw std::invalid_argument("cw_max must equal cw_min * 2^m");
  if (p.retry_limit <= p.m)
    throw std::invalid_argument("retry_limit must exceed m");
  if (p.sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
  if (p.t_payload <= 0.0)
    throw std::invalid_argument("t_payload must be positive");
  if (p.t_overhead < 0.0)
    throw std::invalid_argument("t_overhead must be nonnegative");
  if (p.t_collision < 0.0)
    throw std::invalid_argument("t_collision must be nonnegative");
  if (p.arrival_rate < 0.0)
    throw std::invalid_argument("arrival_rate must be nonnegative");
  if (p.buffer < 1) throw std::invalid_argument("buffer must be at least 1");
}

double contention_window(const MacParameters& p, int stage) {
  if (stage < 0 || stage >= p.retry_limit)
    throw std::invalid_argument("backoff stage out of range");
  double scale = std::pow(2.0, std::min(stage, p.m));
  return scale * double(p.cw_min);
}

double attempt_rate(const MacParameters& p, double gamma) {
  double num = 0.0, den = 0.0, gi = 1.0;
  for (int i = 0; i < p.retry_limit; ++i) {
    num += gi;
    den += 0.5 * (contention_window(p, i) + 1.0) * gi;
    gi *= gamma;
  }
  return num / den;
}

double gamma_of_beta(double beta, double n) {
  return 1.0 - std::pow(1.0 - beta, clamped_exponent(n));
}

double empty_probability(const MacParameters& p, double mean_busy_service) {
  if (p.arrival_rate <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - p.arrival_rate * mean_busy_service);
}

std::vector<double> stage_pmf(double gamma, int m) {
  std::vector<double> pk(std::size_t(m) + 2, 0.0);
  double gi = 1.0;
  for (int k = 0; k <= m; ++k) {
    pk[std::size_t(k)] = (1.0 - gamma) * gi;
    gi *= gamma;
  }
  pk[std::size_t(m) + 1] = gi;  // dropped after m+1 straight collisions
  return pk;
}

ChannelStateProbs channel_state_probs(double beta, double n) {
  ChannelStateProbs st;
  st.idle = std::pow(1.0 - beta, clamped_exponent(n));
  st.success =
      n >= 2.0 ? (n - 1.0) * beta * std::pow(1.0 - beta, std::max(n - 2.0, 0.0))
               : 0.0;
  st.collision = 1.0 - st.idle - st.success;
  return st;
}

double slot_pgf(const ChannelStateProbs& st, const MacParameters& p, double z) {
  double busy = st.idle + st.success * pow_t(z, p.t_payload + p.t_overhead) +
                st.collision * pow_t(z, p.t_collision);
  return pow_t(z, p.sigma) * busy;
}

double slot_mean(const ChannelStateProbs& st, const MacParameters& p) {
  return p.sigma + st.success * (p.t_payload + p.t_overhead) +
         st.collision * p.t_collision;
}

double backoff_stage_pgf(const MacParameters& p, int stage, double z) {
  return uniform_pgf(z, int(contention_window(p, stage)));
}

double attempt_service_slots(const MacParameters& p, const ChannelStateProbs& st,
                             int attempts) {
  if (attempts < 0 || attempts > p.m + 1)
    throw std::invalid_argument("attempts out of range");
  double echi = slot_mean(st, p);
  double backoff = 0.0;
  for (int j = 0; j <= std::min(attempts, p.m); ++j)
    backoff += 0.5 * (contention_window(p, j) - 1.0);
  bool dropped = attempts == p.m + 1;
  double exchanges = 0.0;
  if (p.mode == AccessMode::RtsCts) {
    exchanges = attempts * p.t_collision +
                (dropped ? 0.0 : p.t_overhead + p.t_payload);
  } else {
    // every attempt, failed or not, airs overhead plus the full payload
    double per = p.t_overhead + p.t_payload;
    exchanges = (dropped ? attempts : attempts + 1) * per;
  }
  return exchanges + backoff * echi;
}

PayloadMixture PayloadMixture::single(double duration_slots) {
  PayloadMixture mix;
  mix.weight = {1.0};
  mix.duration = {duration_slots};
  return mix;
}

PayloadMixture PayloadMixture::from_regions(
    const linkstate::RegionProbs& rp, std::span<const double> shares,
    std::span<const double> frame_bits,
    const std::vector<std::vector<double>>& rates) {
  if (shares.size() != frame_bits.size() || shares.size() != rates.size())
    throw std::invalid_argument("shares, frame_bits and rates must align");
  std::vector<std::pair<double, double>> atoms;  // (duration, weight)
  for (std::size_t c = 0; c < shares.size(); ++c) {
    const std::vector<double>& rc = rates[c];
    if (rc.size() != 1 && rc.size() != rp.p.size())
      throw std::invalid_argument("rates rows must match the region count");
    for (std::size_t f = 0; f < rp.p.size(); ++f) {
      double rate = rc.size() == 1 ? rc[0] : rc[f];
      if (rate <= 0.0) throw std::invalid_argument("rates must be positive");
      atoms.emplace_back(frame_bits[c] / rate, shares[c] * rp.p[f]);
    }
  }
  std::sort(atoms.begin(), atoms.end());
  PayloadMixture mix;
  for (const auto& [dur, w] : atoms) {
    mix.duration.push_back(dur);
    mix.weight.push_back(w);
  }
  return mix;
}

double PayloadMixture::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) m += weight[i] * duration[i];
  return m;
}

namespace {

// One damped update step shared by both fixed-point overloads.
struct FixedPointLoop {
  const MacParameters& p;
  double n;
  const PayloadMixture& mix;

  // Queue-emptiness given the current contention estimate.
  double empty_prob(double gamma, double beta) const {
    if (p.arrival_rate <= 0.0) return 0.0;
    DcfFixedPoint cur;
    cur.gamma = gamma;
    cur.beta = beta;
    ChannelStateProbs st = channel_state_probs(beta, n);
    ServiceTimeModel model(p, cur, st, mix, n);
    return empty_probability(p, model.mean_slots());
  }
};

}  // namespace

DcfFixedPoint solve_fixed_point(const MacParameters& p, double n) {
  return solve_fixed_point(p, n, PayloadMixture::single(p.t_payload));
}

DcfFixedPoint solve_fixed_point(const MacParameters& p, double n,
                                const PayloadMixture& mix) {
  if (n < 0.0) throw std::invalid_argument("n must be nonnegative");
  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 10000;
  FixedPointLoop loop{p, n, mix};

  double gamma = 0.5;
  double p0 = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < kMaxIter) {
    ++it;
    double bc = attempt_rate(p, gamma);
    p0 = loop.empty_prob(gamma, (1.0 - p0) * bc);
    double beta = (1.0 - p0) * bc;
    double next = 0.5 * gamma + 0.5 * gamma_of_beta(beta, n);
    residual = std::abs(next - gamma);
    gamma = next;
    if (residual < kTol) break;
  }
  if (residual >= kTol)
    throw FixedPointError("attempt-rate fixed point did not converge", gamma,
                          residual);

  DcfFixedPoint fp;
  fp.gamma = gamma;
  fp.beta_c = attempt_rate(p, gamma);
  fp.p0 = loop.empty_prob(gamma, (1.0 - p0) * fp.beta_c);
  fp.beta = (1.0 - fp.p0) * fp.beta_c;
  fp.residual = residual;
  fp.iterations = it;
  return fp;
}

ServiceTimeModel::ServiceTimeModel(const MacParameters& p,
                                   const DcfFixedPoint& fp,
                                   const ChannelStateProbs& st,
                                   PayloadMixture mix, double contenders)
    : p_(p), fp_(fp), st_(st), mix_(std::move(mix)), n_(contenders) {
  if (mix_.weight.size() != mix_.duration.size() || mix_.weight.empty())
    throw std::invalid_argument("payload mixture must be non-empty and aligned");
  std::vector<std::size_t> order(mix_.weight.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mix_.duration[a] < mix_.duration[b];
  });
  PayloadMixture sorted;
  for (std::size_t i : order) {
    sorted.weight.push_back(mix_.weight[i]);
    sorted.duration.push_back(mix_.duration[i]);
  }
  mix_ = std::move(sorted);

  // Law of the longest payload among the other nodes that share a collision
  // with the tagged one, conditioned on at least one of them transmitting.
  std::size_t k = mix_.weight.size();
  dpsi_.assign(k, 0.0);
  double beta = fp_.beta;
  double silent = std::pow(1.0 - beta, clamped_exponent(n_));
  double denom = 1.0 - silent;
  if (n_ <= 1.0 || beta <= 0.0 || denom <= 0.0) {
    dpsi_ = mix_.weight;
    return;
  }
  double q = 0.0, prev = silent;
  for (std::size_t j = 0; j < k; ++j) {
    q += mix_.weight[j];
    double cur = std::pow(1.0 - beta + beta * q, clamped_exponent(n_));
    dpsi_[j] = (cur - prev) / denom;
    prev = cur;
  }
}

template <class T>
T ServiceTimeModel::transform(T z) const {
  std::vector<double> pk = stage_pmf(fp_.gamma, p_.m);

  // Decrement-slot transform: others' successes carry the mixture payload.
  T observed(0.0);
  for (std::size_t j = 0; j < mix_.weight.size(); ++j)
    observed = observed + T(mix_.weight[j]) *
                              pow_t(z, p_.t_overhead + mix_.duration[j]);
  T chi = pow_t(z, p_.sigma) *
          (T(st_.idle) + T(st_.success) * observed +
           T(st_.collision) * pow_t(z, p_.t_collision));

  // Cumulative backoff factors P_k = prod_{j<=k} H_j(chi).
  std::vector<T> pcum(std::size_t(p_.m) + 1, T(1.0));
  T run(1.0);
  for (int j = 0; j <= p_.m; ++j) {
    run = run * uniform_pgf(chi, int(contention_window(p_, j)));
    pcum[std::size_t(j)] = run;
  }

  T total(0.0);
  for (std::size_t l = 0; l < mix_.weight.size(); ++l) {
    // Per failed attempt: RTS holds the short collision, basic access airs
    // the overhead plus the longer of the two colliding payloads.
    T coll(0.0);
    if (p_.mode == AccessMode::RtsCts) {
      coll = pow_t(z, p_.t_collision);
    } else {
      for (std::size_t j = 0; j < dpsi_.size(); ++j)
        coll = coll + T(dpsi_[j]) *
                          pow_t(z, std::max(mix_.duration[l], mix_.duration[j]));
      coll = pow_t(z, p_.t_overhead) * coll;
    }
    T succ = pow_t(z, p_.t_overhead + mix_.duration[l]);
    T collpow(1.0);
    T leg(0.0);
    for (int k = 0; k <= p_.m; ++k) {
      leg = leg + T(pk[std::size_t(k)]) * collpow * succ * pcum[std::size_t(k)];
      collpow = collpow * coll;
    }
    leg = leg + T(pk[std::size_t(p_.m) + 1]) * collpow * pcum[std::size_t(p_.m)];
    total = total + T(mix_.weight[l]) * leg;
  }
  return total;
}

double ServiceTimeModel::pgf(double z) const { return transform(z); }

double ServiceTimeModel::laplace(double s) const { return pgf(std::exp(-s)); }

double ServiceTimeModel::pgf_mean() const {
  return transform(Dual(1.0, 1.0)).d;
}

double ServiceTimeModel::backoff_pgf(double z) const {
  std::vector<double> pk = stage_pmf(fp_.gamma, p_.m);
  double observed = 0.0;
  for (std::size_t j = 0; j < mix_.weight.size(); ++j)
    observed += mix_.weight[j] *
                pow_t(z, p_.t_overhead + mix_.duration[j]);
  double chi = pow_t(z, p_.sigma) *
               (st_.idle + st_.success * observed +
                st_.collision * pow_t(z, p_.t_collision));
  double run = 1.0, total = 0.0;
  for (int k = 0; k <= p_.m; ++k) {
    run *= uniform_pgf(chi, int(contention_window(p_, k)));
    total += pk[std::size_t(k)] * run;
  }
  total += pk[std::size_t(p_.m) + 1] * run;
  return total;
}

double ServiceTimeModel::mean_slots() const {
  std::vector<double> pk = stage_pmf(fp_.gamma, p_.m);
  double echi = p_.sigma + st_.success * (p_.t_overhead + mix_.mean()) +
                st_.collision * p_.t_collision;
  std::vector<double> bk(std::size_t(p_.m) + 1, 0.0);
  double acc = 0.0;
  for (int j = 0; j <= p_.m; ++j) {
    acc += 0.5 * (contention_window(p_, j) - 1.0);
    bk[std::size_t(j)] = acc;
  }
  double total = 0.0;
  for (std::size_t l = 0; l < mix_.weight.size(); ++l) {
    double coll = p_.t_collision;
    if (p_.mode == AccessMode::BasicAccess) {
      double g = 0.0;
      for (std::size_t j = 0; j < dpsi_.size(); ++j)
        g += dpsi_[j] * std::max(mix_.duration[l], mix_.duration[j]);
      coll = p_.t_overhead + g;
    }
    double leg = 0.0;
    for (int k = 0; k <= p_.m; ++k) {
      leg += pk[std::size_t(k)] *
             (k * coll + p_.t_overhead + mix_.duration[l] +
              bk[std::size_t(k)] * echi);
    }
    leg += pk[std::size_t(p_.m) + 1] *
           ((p_.m + 1) * coll + bk[std::size_t(p_.m)] * echi);
    total += mix_.weight[l] * leg;
  }
  return total;
}

double service_time_pgf(const MacParameters& p, const DcfFixedPoint& fp,
                        const ChannelStateProbs& st, const PayloadMixture& mix,
                        double n, double z) {
  return ServiceTimeModel(p, fp, st, mix, n).pgf(z);
}

double laplace_service(const MacParameters& p, const DcfFixedPoint& fp,
                       const ChannelStateProbs& st, const PayloadMixture& mix,
                       double n, double s) {
  return ServiceTimeModel(p, fp, st, mix, n).laplace(s);
}

double mean_service_time(const MacParameters& p, const DcfFixedPoint& fp,
                         const ChannelStateProbs& st, const PayloadMixture& mix,
                         double n) {
  return ServiceTimeModel(p, fp, st, mix, n).mean_slots();
}

double mean_service_time(const MacParameters& p, const DcfFixedPoint& fp,
                         const ChannelStateProbs& st,
                         const linkstate::RegionProbs& rp,
                         std::span<const double> shares,
                         std::span<const double> frame_bits,
                         const std::vector<std::vector<double>>& rates,
                         double n) {
  PayloadMixture mix = PayloadMixture::from_regions(rp, shares, frame_bits, rates);
  return mean_service_time(p, fp, st, mix, n);
}

std::vector<double> throughput(const MacParameters& p, const DcfFixedPoint& fp,
                               double n, std::span<const double> shares,
                               std::span<const double> frame_bits,
                               std::span<const double> mixed_rates) {
  if (shares.size() != frame_bits.size() || shares.size() != mixed_rates.size())
    throw std::invalid_argument("shares, frame_bits and rates must align");
  double beta = fp.beta;
  if (beta <= 0.0 || beta >= 1.0)
    throw std::runtime_error("throughput needs an attempt rate in (0, 1)");
  double a = std::pow(1.0 - beta, clamped_exponent(n));
  double ba = beta * a;
  double cycle = p.sigma / ba + n * (p.t_overhead - p.t_collision) +
                 (1.0 / ba + 1.0 - 1.0 / beta) * p.t_collision;
  double air = 0.0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (mixed_rates[i] <= 0.0)
      throw std::invalid_argument("rates must be positive");
    air += shares[i] * frame_bits[i] / mixed_rates[i];
  }
  cycle += n * air;
  if (cycle <= 0.0)
    throw std::runtime_error("renewal cycle length must be positive");
  std::vector<double> th(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) th[i] = frame_bits[i] / cycle;
  return th;
}

}  // namespace v2r::mac
