#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"
#include "okdrop/minimizer.hpp"

using namespace okdrop;

namespace {

constexpr double kPi = std::numbers::pi;

// lambda = 1 with budget 16 * 10 pi.
TorusSpec bcc16_spec() {
  const double l = 160.0 * kPi;
  return TorusSpec(1.0 / (l * l * l), 1.0);
}

double min_distance(const DropletConfig& c) {
  double best = 1e300;
  const double l = c.spec.side_length();
  for (std::size_t i = 0; i < c.droplets.size(); ++i)
    for (std::size_t j = i + 1; j < c.droplets.size(); ++j)
      best = std::min(best, torus_distance(c.droplets[i].center, c.droplets[j].center, l));
  return best;
}

double mass_sum(const DropletConfig& c) {
  double s = 0.0;
  for (const auto& d : c.droplets) s += d.mass;
  return s;
}

AnnealSchedule quick(std::uint64_t seed) {
  AnnealSchedule s;
  s.seed = seed;
  s.steps_per_temp = 60;
  s.max_levels = 40;
  return s;
}

TEST(Lattice, NamesAndBasis) {
  EXPECT_EQ(parse_lattice("BCC"), Lattice::kBCC);
  EXPECT_EQ(lattice_name(Lattice::kFCC), "fcc");
  EXPECT_EQ(lattice_basis_size(Lattice::kSC), 1);
  EXPECT_EQ(lattice_basis_size(Lattice::kBCC), 2);
  EXPECT_EQ(lattice_basis_size(Lattice::kFCC), 4);
  EXPECT_THROW(parse_lattice("hcp"), ParameterError);
  EXPECT_EQ(lattice_sites(Lattice::kFCC, 3, 1.0).size(), 108u);
}

TEST(InitLattice, SixteenDropletBcc) {
  const TorusSpec spec = bcc16_spec();
  const DropletConfig c = init_lattice(spec, Lattice::kBCC, 10.0 * kPi);
  ASSERT_EQ(c.droplets.size(), 16u);
  EXPECT_EQ(mass_sum(c), spec.mass_budget());
  const double l = spec.side_length();
  EXPECT_NEAR(min_distance(c), std::sqrt(3.0) / 2.0 * (l / 2.0), 1e-9 * l);
  for (const auto& d : c.droplets) EXPECT_NEAR(d.mass, 10.0 * kPi, 1e-9);
}

TEST(InitLattice, SingleScDropletCarriesTheBudget) {
  const TorusSpec spec(1e-4, 1.0);
  const DropletConfig c = init_lattice(spec, Lattice::kSC, spec.mass_budget());
  ASSERT_EQ(c.droplets.size(), 1u);
  EXPECT_EQ(c.droplets[0].mass, spec.mass_budget());
}

TEST(InitLattice, NearestAdmissibleCount) {
  // 20 requested BCC droplets: admissible counts are 2, 16, 54, so 16 is used.
  const TorusSpec spec = bcc16_spec();
  const DropletConfig c = init_lattice(spec, Lattice::kBCC, spec.mass_budget() / 20.0);
  EXPECT_EQ(c.droplets.size(), 16u);
  EXPECT_EQ(mass_sum(c), spec.mass_budget());
}

TEST(InitLattice, InfeasibleWhenBallsCannotFit) {
  const TorusSpec spec(1.0 / 27.0, 5.0);  // side 3, budget 15
  EXPECT_THROW(init_lattice(spec, Lattice::kFCC, 15.0 / 4.0), InfeasibleError);
}

TEST(Schedule, Validation) {
  AnnealSchedule s;
  EXPECT_NO_THROW(s.validate());
  s.cooling_rate = 1.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = AnnealSchedule{};
  s.weights = {0, 0, 0, 0, 0};
  EXPECT_THROW(s.validate(), ParameterError);
  s = AnnealSchedule{};
  s.min_mass = 50.0;
  s.max_mass = 10.0;
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Anneal, GreedyTraceIsMonotone) {
  const TorusSpec spec = bcc16_spec();
  const DropletConfig start = init_lattice(spec, Lattice::kBCC, 10.0 * kPi);
  const EwaldKernel k(spec.side_length());
  AnnealSchedule s = quick(5);
  s.initial_temp = 0.0;
  const auto r = anneal(start, k, s);
  const double e0 = total_energy(start, k).scaled_total;
  EXPECT_LE(r.breakdown.scaled_total, e0 + 1e-12);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i].energy, r.history[i - 1].energy + 1e-9);
  EXPECT_EQ(mass_sum(r.config), spec.mass_budget());
}

TEST(Anneal, ConservesMassAndAvoidsOverlap) {
  const TorusSpec spec(1e-5, 1.0);
  const DropletConfig start = init_lattice(spec, Lattice::kSC, 10.0 * kPi);
  const EwaldKernel k(spec.side_length());
  const auto r = anneal(start, k, quick(9));
  EXPECT_EQ(mass_sum(r.config), spec.mass_budget());
  EXPECT_NO_THROW(validate(r.config));
  for (const auto& d : r.config.droplets) {
    EXPECT_GE(d.mass, 1.0);
    EXPECT_LE(d.mass, 100.0);
  }
  double best = 1e300;
  for (const auto& h : r.history) {
    EXPECT_LE(h.best, best + 1e-12);
    best = h.best;
  }
}

TEST(Anneal, ReproducibleForFixedSeed) {
  const TorusSpec spec(1e-5, 1.0);
  const DropletConfig start = init_lattice(spec, Lattice::kBCC, 10.0 * kPi);
  const EwaldKernel k(spec.side_length());
  const auto a = anneal(start, k, quick(42));
  const auto b = anneal(start, k, quick(42));
  ASSERT_EQ(a.config.droplets.size(), b.config.droplets.size());
  for (std::size_t i = 0; i < a.config.droplets.size(); ++i) {
    EXPECT_EQ(a.config.droplets[i].mass, b.config.droplets[i].mass);
    EXPECT_EQ(a.config.droplets[i].center.x, b.config.droplets[i].center.x);
  }
  EXPECT_EQ(a.accepted_moves, b.accepted_moves);
}

TEST(Anneal, TwoOptimalDropletsStayApart) {
  // Budget 2 * 10 pi on a large torus: merging into one 20 pi ball costs energy.
  const double l = 400.0;
  const TorusSpec spec(1.0 / (l * l * l), 20.0 * kPi / l);
  DropletConfig start{spec, {}};
  const auto m = equal_masses(spec.mass_budget(), 2);
  start.droplets = {{Vec3{50, 50, 50}, m[0]}, {Vec3{250, 250, 250}, m[1]}};
  const EwaldKernel k(l);
  const auto r = anneal(start, k, quick(3));
  EXPECT_EQ(r.config.droplets.size(), 2u);
  EXPECT_LT(2.0 * drop::e_ball(10.0 * kPi), drop::e_ball(20.0 * kPi));
}

TEST(Anneal, OversizedDropletSplits) {
  const double l = 200.0;
  const TorusSpec spec(1.0 / (l * l * l), 60.0 / l);
  DropletConfig start{spec, {{Vec3{10, 10, 10}, spec.mass_budget()}}};
  const EwaldKernel k(l);
  const auto r = anneal(start, k, quick(4));
  EXPECT_GE(r.config.droplets.size(), 2u);
  EXPECT_GT(r.accepted_by_kind[kSplit], 0);
}

TEST(Polish, RestoresJitteredBcc) {
  const TorusSpec spec = bcc16_spec();
  const DropletConfig ideal = init_lattice(spec, Lattice::kBCC, 10.0 * kPi);
  const EwaldKernel k(spec.side_length());
  DropletConfig jitter = ideal;
  std::mt19937_64 rng(1);
  const double d = std::sqrt(3.0) / 2.0 * spec.side_length() / 2.0;
  std::normal_distribution<double> n(0.0, 0.01 * d);
  for (auto& dr : jitter.droplets) dr.center = dr.center + Vec3{n(rng), n(rng), n(rng)};
  const auto p = polish(jitter, k, 1e-13);
  const double e_ideal = total_energy(ideal, k).total;
  EXPECT_NEAR(p.breakdown.total / e_ideal, 1.0, 1e-6);
  EXPECT_LT(p.multiplier_spread, 1e-3);
  EXPECT_EQ(mass_sum(p.config), spec.mass_budget());
  const auto first = polish(jitter, k, 1e-10);
  const auto again = polish(first.config, k, 1e-10);
  EXPECT_TRUE(again.converged);
  EXPECT_NEAR(again.breakdown.total, first.breakdown.total, 1e-10 * std::abs(first.breakdown.total));
}

TEST(Gradients, MatchFiniteDifferences) {
  const TorusSpec spec(1e-5, 1.0);
  DropletConfig c = init_lattice(spec, Lattice::kSC, 10.0 * kPi);
  c.droplets[0].center = c.droplets[0].center + Vec3{1.0, -0.5, 0.3};
  const EwaldKernel k(spec.side_length());
  const auto g = center_gradient(c, k);
  const double h = 1e-4;
  DropletConfig p = c, m = c;
  p.droplets[0].center.x += h;
  m.droplets[0].center.x -= h;
  const double fd = (total_energy(p, k).total - total_energy(m, k).total) / (2 * h);
  EXPECT_NEAR(g[0].x, fd, 1e-6 * (1.0 + std::abs(fd)));

  const auto mu = mass_multipliers(c, k);
  const double hm = 1e-5;
  DropletConfig mp = c, mm = c;
  mp.droplets[1].mass += hm;
  mm.droplets[1].mass -= hm;
  // Total-energy difference at fixed centres; the budget changes, which total_energy ignores.
  const double fdm = (total_energy(mp, k).total - total_energy(mm, k).total) / (2 * hm);
  EXPECT_NEAR(mu[1], fdm, 1e-6 * std::abs(fdm));
}

}  // namespace
