#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "v2r/game.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace v2r;

namespace {

mac::MacParameters reference_mac() {
  mac::MacParameters p;
  p.cw_min = 32;
  p.cw_max = 1024;
  p.m = 5;
  p.retry_limit = 7;
  p.sigma = 1.0;
  p.t_payload = 50.0;
  p.t_overhead = 10.0;
  p.t_collision = 5.0;
  p.mode = mac::AccessMode::RtsCts;
  return p;
}

linkstate::RegionProbs two_regions() {
  linkstate::RegionProbs rp;
  rp.p = {0.4034264097200273, 0.5965735902799727};
  return rp;
}

// Two identical-trait classes (masses 6 and 4) over rate-scaled copies of a
// base channel. The equilibrium equalizes airtime load, so channel masses
// are proportional to the scales.
game::GameProblem twin_problem(const std::vector<double>& scales, double phi = 1.0) {
  const double pi = 0.052895038527058014;
  std::vector<game::ClassTraits> classes{
      {"heavy", 6.0, 6000.0, 0.06, pi},
      {"light", 4.0, 6000.0, 0.06, pi},
  };
  std::vector<game::ChannelSpec> channels;
  for (std::size_t l = 0; l < scales.size(); ++l) {
    game::ChannelSpec ch;
    ch.id = "ch" + std::to_string(l);
    ch.mac = reference_mac();
    ch.rates = {{200.0 * scales[l], 240.0 * scales[l]},
                {200.0 * scales[l], 240.0 * scales[l]}};
    channels.push_back(ch);
  }
  game::GameState ref =
      game::uniform_state(std::vector<double>{6.0, 4.0}, scales.size());
  return game::build_problem(classes, channels, two_regions(), ref, phi);
}

// Heterogeneous two-class, two-channel instance for gradient checks.
game::GameProblem mixed_problem(double phi = 1.0) {
  std::vector<game::ClassTraits> classes{
      {"a", 2.0, 4000.0, 0.08, 0.06},
      {"b", 3.0, 9000.0, 0.05, 0.04},
  };
  std::vector<game::ChannelSpec> channels(2);
  channels[0].id = "c0";
  channels[0].mac = reference_mac();
  channels[0].rates = {{200.0, 240.0}, {190.0, 230.0}};
  channels[1].id = "c1";
  channels[1].mac = reference_mac();
  channels[1].rates = {{184.0, 220.8}, {174.8, 211.6}};
  game::GameState ref = game::uniform_state(std::vector<double>{2.0, 3.0}, 2);
  return game::build_problem(classes, channels, two_regions(), ref, phi);
}

game::GameState random_interior(const game::GameProblem& pb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  game::GameState s;
  s.masses.resize(pb.num_classes());
  s.x.assign(pb.num_classes(), std::vector<double>(pb.num_channels(), 0.0));
  for (std::size_t c = 0; c < pb.num_classes(); ++c) {
    s.masses[c] = pb.classes[c].mass;
    double sum = 0.0;
    for (std::size_t l = 0; l < pb.num_channels(); ++l) {
      s.x[c][l] = uni(rng);
      sum += s.x[c][l];
    }
    for (std::size_t l = 0; l < pb.num_channels(); ++l)
      s.x[c][l] *= s.masses[c] / sum;
  }
  return s;
}

}  // namespace

TEST_CASE("game state bookkeeping") {
  game::GameState s = game::uniform_state(std::vector<double>{6.0, 4.0}, 2);
  REQUIRE(s.classes() == 2);
  REQUIRE(s.channels() == 2);
  CHECK(s.x[0][0] == 3.0);
  CHECK(s.x[1][1] == 2.0);
  CHECK(s.channel_mass(0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_NOTHROW(s.validate());

  game::GameState bad = s;
  bad.x[0][0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.x[1][0] += 0.5;  // row no longer sums to the class mass
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("channel aggregates at reference occupancies") {
  mac::MacParameters p = reference_mac();

  game::ChannelCoefficients idle = game::channel_aggregates(p, 0.0);
  CHECK(idle.k0 == doctest::Approx(21.5).epsilon(1e-9));
  CHECK(idle.gamma == doctest::Approx(0.0).epsilon(1e-12));

  game::ChannelCoefficients one = game::channel_aggregates(p, 1.0);
  CHECK(one.k0 == doctest::Approx(26.5).epsilon(1e-6));
  CHECK(one.k1 == doctest::Approx(53.0 / 33.0).epsilon(1e-9));
  CHECK(one.k2_over_n == doctest::Approx(2.0 / 33.0).epsilon(1e-9));

  game::ChannelCoefficients five = game::channel_aggregates(p, 5.0);
  CHECK(five.gamma == doctest::Approx(0.17809998240885244).epsilon(1e-9));
  CHECK(five.beta == doctest::Approx(0.04785136874194363).epsilon(1e-9));
  CHECK(five.k0 == doctest::Approx(78.06880292698557).epsilon(1e-9));
  CHECK(five.k1 == doctest::Approx(3.070273148085176).epsilon(1e-9));
  CHECK(five.k2_over_n == doctest::Approx(0.03932778565794934).epsilon(1e-9));
  CHECK(five.k2() == doctest::Approx(5.0 * five.k2_over_n).epsilon(1e-15));

  game::ChannelCoefficients ten = game::channel_aggregates(p, 10.0);
  CHECK(ten.k0 == doctest::Approx(147.4014025442651).epsilon(1e-9));
  CHECK(ten.k1 == doctest::Approx(3.9078790940043517).epsilon(1e-9));
  CHECK(ten.k2_over_n == doctest::Approx(0.026511817571279912).epsilon(1e-9));

  // the embedded contention solve matches the stand-alone one
  mac::DcfFixedPoint fp = mac::solve_fixed_point(p, 5.0);
  CHECK(five.gamma == doctest::Approx(fp.gamma).epsilon(1e-13));
  CHECK(five.beta == doctest::Approx(fp.beta).epsilon(1e-13));

  // fractional occupancies are legal for population masses
  game::ChannelCoefficients frac = game::channel_aggregates(p, 2.5);
  CHECK(frac.k0 > 0.0);
  CHECK(std::isfinite(frac.k1));
}

TEST_CASE("problem building and airtime") {
  game::GameProblem pb = twin_problem({1.0, 0.9});
  REQUIRE(pb.num_classes() == 2);
  REQUIRE(pb.num_channels() == 2);
  CHECK(pb.channel_ids[0] == "ch0");
  CHECK(pb.open(0, 0));
  CHECK(pb.open(1, 1));

  // airtime per unit mass: sum_f P_f * L / C_f
  CHECK(pb.airtime[0][0] == doctest::Approx(27.017132048600136).epsilon(1e-12));
  CHECK(pb.airtime[1][0] == doctest::Approx(27.017132048600136).epsilon(1e-12));
  CHECK(pb.airtime[0][1] == doctest::Approx(30.019035609555708).epsilon(1e-12));
  // rate scaling moves airtime inversely
  CHECK(pb.airtime[0][1] == doctest::Approx(pb.airtime[0][0] / 0.9).epsilon(1e-12));

  // the reference occupancy is the uniform split: five units per channel
  CHECK(pb.coeffs[0].occupancy == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(pb.coeffs[0].k0 == doctest::Approx(78.06880292698557).epsilon(1e-9));

  // round region shares with exact arithmetic
  linkstate::RegionProbs rp;
  rp.p = {0.4, 0.6};
  std::vector<game::ClassTraits> classes{{"solo", 1.0, 6000.0, 0.05, 1.0}};
  std::vector<game::ChannelSpec> channels(1);
  channels[0].id = "only";
  channels[0].mac = reference_mac();
  channels[0].rates = {{200.0, 240.0}};
  game::GameState ref = game::uniform_state(std::vector<double>{1.0}, 1);
  game::GameProblem one = game::build_problem(classes, channels, rp, ref);
  CHECK(one.airtime[0][0] == doctest::Approx(27.0).epsilon(1e-13));
}

TEST_CASE("per-unit throughput and channel service time") {
  game::GameProblem pb = twin_problem({1.0, 0.9});
  game::GameState ref = game::uniform_state(std::vector<double>{6.0, 4.0}, 2);

  double load0 = 3.0 * pb.airtime[0][0] + 2.0 * pb.airtime[1][0];
  CHECK(game::per_unit_throughput(pb, ref, 0, 0) ==
        doctest::Approx(6000.0 / (pb.coeffs[0].k0 + load0)).epsilon(1e-12));
  CHECK(game::channel_service_time(pb, ref, 0) ==
        doctest::Approx(pb.coeffs[0].k1 + pb.coeffs[0].k2_over_n * load0)
            .epsilon(1e-12));

  // an empty channel serves at the floor values
  game::GameState lop = ref;
  lop.x[0] = {6.0, 0.0};
  lop.x[1] = {4.0, 0.0};
  CHECK(game::per_unit_throughput(pb, lop, 0, 1) ==
        doctest::Approx(6000.0 / pb.coeffs[1].k0).epsilon(1e-12));
  CHECK(game::channel_service_time(pb, lop, 1) ==
        doctest::Approx(pb.coeffs[1].k1).epsilon(1e-12));

  // more load, less per-unit throughput and longer service
  CHECK(game::per_unit_throughput(pb, lop, 0, 0) <
        game::per_unit_throughput(pb, ref, 0, 0));
  CHECK(game::channel_service_time(pb, lop, 0) >
        game::channel_service_time(pb, ref, 0));
}

TEST_CASE("potential basics") {
  game::GameProblem pb = twin_problem({1.0, 0.9});

  game::GameState zero;
  zero.masses = {0.0, 0.0};
  zero.x = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK(game::potential(pb, zero) == doctest::Approx(0.0).epsilon(1e-15));

  // the payoff scale is a common multiplier
  game::GameProblem pb2 = twin_problem({1.0, 0.9}, 2.0);
  game::GameState s = random_interior(pb, 42);
  CHECK(game::potential(pb2, s) ==
        doctest::Approx(2.0 * game::potential(pb, s)).epsilon(1e-12));
  game::PayoffReport r1 = game::payoff(pb, s);
  game::PayoffReport r2 = game::payoff(pb2, s);
  CHECK(r2.payoff[0][1] == doctest::Approx(2.0 * r1.payoff[0][1]).epsilon(1e-12));
}

TEST_CASE("payoff is the allocation gradient of the potential") {
  const double h = 1e-5;
  for (int variant = 0; variant < 2; ++variant) {
    game::GameProblem pb = variant == 0 ? twin_problem({1.0, 0.9}) : mixed_problem();
    for (std::uint64_t seed : {7u, 19u, 23u}) {
      game::GameState s = random_interior(pb, seed);
      game::PayoffReport rep = game::payoff(pb, s);
      for (std::size_t c = 0; c < pb.num_classes(); ++c) {
        for (std::size_t l = 0; l < pb.num_channels(); ++l) {
          game::GameState up = s, dn = s;
          up.x[c][l] += h;
          dn.x[c][l] -= h;
          double fd = (game::potential(pb, up) - game::potential(pb, dn)) / (2.0 * h);
          CHECK(rep.payoff[c][l] == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("identical channels earn identical payoffs") {
  game::GameProblem pb = twin_problem({1.0, 1.0});
  game::GameState ref = game::uniform_state(std::vector<double>{6.0, 4.0}, 2);
  game::PayoffReport rep = game::payoff(pb, ref);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(rep.payoff[c][0] == doctest::Approx(rep.payoff[c][1]).epsilon(1e-14));
    CHECK(rep.excess[c][0] == doctest::Approx(0.0).epsilon(1e-14));
  }
  CHECK(rep.max_excess() == doctest::Approx(0.0).epsilon(1e-14));

  // nothing moves from the symmetric point
  game::GameState next = game::bnn_step(pb, ref, 0.05);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t l = 0; l < 2; ++l)
      CHECK(next.x[c][l] == doctest::Approx(ref.x[c][l]).epsilon(1e-13));
}

TEST_CASE("growth field hand example") {
  game::GameProblem pb = twin_problem({1.0, 1.0});

  game::GameState s;
  s.masses = {2.0, 4.0};
  s.x = {{1.0, 1.0}, {2.0, 2.0}};
  game::PayoffReport rep;
  rep.payoff = {{1.0, 0.0}, {0.5, 0.5}};
  rep.class_average = {0.5, 0.5};
  rep.excess = {{0.5, -0.5}, {0.0, 0.0}};

  std::vector<std::vector<double>> v = game::bnn_velocity(pb, s, rep);
  CHECK(v[0][0] == doctest::Approx(0.5).epsilon(1e-14));   // 2*0.5 - 1*0.5
  CHECK(v[0][1] == doctest::Approx(-0.5).epsilon(1e-14));  // 0 - 1*0.5
  CHECK(v[1][0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(v[1][1] == doctest::Approx(0.0).epsilon(1e-14));
  // conservation: the field sums to zero per class
  CHECK(v[0][0] + v[0][1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dynamic steps conserve class masses") {
  game::GameProblem pb = twin_problem({1.0, 0.9});
  game::GameState s = random_interior(pb, 99);
  game::GameState next = game::bnn_step(pb, s, 0.2);
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = next.x[c][0] + next.x[c][1];
    CHECK(sum == doctest::Approx(s.masses[c]).epsilon(1e-12));
    for (std::size_t l = 0; l < 2; ++l) CHECK(next.x[c][l] >= 0.0);
  }
  // a step from a non-equilibrium state strictly raises the potential
  CHECK(game::potential(pb, next) > game::potential(pb, s));
}

TEST_CASE("dynamics find the two-channel equilibrium") {
  game::GameProblem pb = twin_problem({1.0, 0.9});
  game::GameState start = game::uniform_state(std::vector<double>{6.0, 4.0}, 2);

  game::WardropCheck before = game::is_wardrop(pb, start, 1e-5);
  CHECK_FALSE(before.ok);
  REQUIRE_FALSE(before.violations.empty());
  CHECK(before.violations[0].gap > 0.0);

  game::BnnConfig cfg;
  cfg.h = 0.5;
  cfg.eps = 1e-6;
  cfg.max_steps = 20000;
  cfg.record_every = 10;
  game::BnnResult res = game::run_bnn(pb, start, cfg);

  CHECK(res.converged);
  CHECK(res.steps < 200);
  CHECK(res.max_excess < 1e-6);
  CHECK(res.min_step_gain >= -1e-9);
  CHECK(res.max_mass_drift < 1e-9);
  CHECK(res.potential == doctest::Approx(14.133691777069753).epsilon(1e-6));

  // load equalization puts masses 100/19 and 90/19 on the channels
  CHECK(res.state.channel_mass(0) == doctest::Approx(100.0 / 19.0).epsilon(1e-4));
  CHECK(res.state.channel_mass(1) == doctest::Approx(90.0 / 19.0).epsilon(1e-4));
  CHECK(game::is_wardrop(pb, res.state, 1e-5).ok);

  REQUIRE(res.trajectory.size() >= 2);
  CHECK(res.trajectory.front().step == 0);
  double prev = res.trajectory.front().potential;
  for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
    CHECK(res.trajectory[i].potential >= prev - 1e-9);
    CHECK(res.trajectory[i].vf >= -1e-12);
    prev = res.trajectory[i].potential;
  }
  REQUIRE(res.trajectory.back().x.size() == 4);
  CHECK(res.trajectory.back().x[0] + res.trajectory.back().x[1] ==
        doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("dynamics find the three-channel equilibrium") {
  game::GameProblem pb = twin_problem({1.0, 0.92, 1.08});
  game::GameState start = game::uniform_state(std::vector<double>{6.0, 4.0}, 3);
  game::BnnConfig cfg;
  cfg.h = 0.5;
  cfg.eps = 1e-6;
  cfg.max_steps = 20000;
  game::BnnResult res = game::run_bnn(pb, start, cfg);

  CHECK(res.converged);
  CHECK(res.potential == doctest::Approx(21.516691280240465).epsilon(1e-6));
  CHECK(res.state.channel_mass(0) == doctest::Approx(10.0 / 3.0).epsilon(1e-4));
  CHECK(res.state.channel_mass(1) == doctest::Approx(46.0 / 15.0).epsilon(1e-4));
  CHECK(res.state.channel_mass(2) == doctest::Approx(18.0 / 5.0).epsilon(1e-4));
  CHECK(game::is_wardrop(pb, res.state, 1e-5).ok);
}

TEST_CASE("direct maximization agrees with the dynamics") {
  game::GameProblem pb = twin_problem({1.0, 0.9});
  game::AscentConfig acfg;
  game::AscentResult opt = game::optimize_potential(pb, acfg);
  CHECK(opt.potential == doctest::Approx(14.133691777069753).epsilon(1e-6));
  CHECK(opt.state.channel_mass(0) == doctest::Approx(100.0 / 19.0).epsilon(1e-3));
  CHECK_NOTHROW(opt.state.validate(1e-6));

  // deterministic across calls with the same configuration
  game::AscentResult again = game::optimize_potential(pb, acfg);
  CHECK(again.potential == opt.potential);
  CHECK(again.best_start == opt.best_start);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t l = 0; l < 2; ++l)
      CHECK(again.state.x[c][l] == opt.state.x[c][l]);

  // a single channel leaves no choice
  std::vector<game::ClassTraits> classes{{"solo", 3.0, 6000.0, 0.05, 0.05}};
  std::vector<game::ChannelSpec> channels(1);
  channels[0].id = "only";
  channels[0].mac = reference_mac();
  channels[0].rates = {{200.0, 240.0}};
  game::GameState ref = game::uniform_state(std::vector<double>{3.0}, 1);
  game::GameProblem solo = game::build_problem(classes, channels, two_regions(), ref);
  game::AscentResult sres = game::optimize_potential(solo, acfg);
  CHECK(sres.state.x[0][0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sres.potential == doctest::Approx(game::potential(solo, ref)).epsilon(1e-12));
}

TEST_CASE("simplex projection") {
  std::vector<double> a = game::project_simplex(std::vector<double>{1.0, 2.0}, 1.0);
  CHECK(a[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> b = game::project_simplex(std::vector<double>{0.2, 0.3}, 1.0);
  CHECK(b[0] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(0.55).epsilon(1e-15));

  std::vector<double> c = game::project_simplex(std::vector<double>{5.0, -5.0}, 1.0);
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> d = game::project_simplex(std::vector<double>{-1.0, 1.0}, 2.0);
  CHECK(d[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-15));

  // projecting a feasible point is the identity
  std::vector<double> e = game::project_simplex(std::vector<double>{0.25, 0.75}, 1.0);
  CHECK(e[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(e[1] == doctest::Approx(0.75).epsilon(1e-15));
}
