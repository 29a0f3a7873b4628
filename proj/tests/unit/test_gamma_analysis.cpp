#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"
#include "okdrop/gamma_analysis.hpp"

using namespace okdrop;

namespace {

constexpr double kPi = std::numbers::pi;
const double kFStar = drop::f_star_closed_form();
const double kMStar = drop::m_star_closed_form();

std::vector<double> random_density(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n) * n * n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(E0, UniformIsExact) {
  const EwaldKernel unit(1.0);
  for (double lambda : {0.5, 1.0, 5.0}) {
    const auto mu = LimitMeasure::uniform(lambda, 16);
    EXPECT_EQ(e0_energy(mu, unit, kFStar), lambda * kFStar);
  }
}

TEST(E0, SingleModeClosedForm) {
  // g = lambda (1 + a cos 2 pi x): coefficients lambda a / 2 at k = +-e1, so the
  // Coulomb part is 2 * (1/2) (lambda a / 2)^2 / (4 pi^2) = lambda^2 a^2 / (16 pi^2).
  const double lambda = 2.0, a = 0.6;
  const auto mu = LimitMeasure::sampled(12, [&](const Vec3& x) { return lambda * (1.0 + a * std::cos(2 * kPi * x.x)); });
  EXPECT_NEAR(e0_energy(mu, EwaldKernel(1.0), kFStar), lambda * kFStar + lambda * lambda * a * a / (16 * kPi * kPi),
              1e-13);
  EXPECT_NEAR(mu.total_mass(), lambda, 1e-14);
}

TEST(E0, OffAxisMode) {
  // 1 + b sin 2 pi (x + 2y): |k|^2 = 20 pi^2, coefficients b/2 at +-k.
  const double b = 0.3;
  const auto mu = LimitMeasure::sampled(
      10, [&](const Vec3& x) { return 1.0 + b * std::sin(2 * kPi * (x.x + 2 * x.y)); });
  EXPECT_NEAR(coulomb_form(10, mu.values()), b * b / (16 * kPi * kPi * 5.0), 1e-14);
}

TEST(E0, RejectsAtomsAndWrongTorus) {
  const auto atoms = LimitMeasure::atomic({Vec3{0.5, 0.5, 0.5}}, {1.0});
  try {
    e0_energy(atoms, EwaldKernel(1.0), kFStar);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("infinite Coulomb self-energy"), std::string::npos);
  }
  EXPECT_THROW(e0_energy(LimitMeasure::uniform(1.0, 4), EwaldKernel(2.0), kFStar), ParameterError);
  EXPECT_THROW(LimitMeasure::density(2, {1.0, -1.0, 1, 1, 1, 1, 1, 1}), ParameterError);
}

TEST(E0, StrictConvexity) {
  std::mt19937_64 rng(2024);
  const EwaldKernel unit(1.0);
  for (int t = 0; t < 5; ++t) {
    const auto a = LimitMeasure::density(8, random_density(rng, 8, 0.2, 2.0));
    const auto b = LimitMeasure::density(8, random_density(rng, 8, 0.2, 2.0));
    std::vector<double> mid(a.values().size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (a.values()[i] + b.values()[i]);
    const auto m = LimitMeasure::density(8, mid);
    const double gap = 0.5 * (e0_energy(a, unit, kFStar) + e0_energy(b, unit, kFStar)) - e0_energy(m, unit, kFStar);
    const double margin = convexity_margin(a, b);
    EXPECT_GT(margin, 0.0);
    EXPECT_NEAR(gap, margin, 1e-12 * (1.0 + std::abs(e0_energy(a, unit, kFStar))));
  }
}

TEST(LimitMeasure, MassInBoxIsExactOverlap) {
  std::vector<double> v(8, 0.0);
  v[0] = 8.0;  // cell [0, 1/2)^3
  const auto mu = LimitMeasure::density(2, v);
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-15);
  EXPECT_NEAR(mu.mass_in_box(Vec3{0, 0, 0}, Vec3{0.25, 0.5, 0.5}), 0.5, 1e-15);
  EXPECT_NEAR(mu.mass_in_box(Vec3{0.25, 0.25, 0.25}, Vec3{0.75, 0.75, 0.75}), 0.125, 1e-15);
}

TEST(Recovery, UniformDensityIsExactAndFeasible) {
  const double lambda = 5.0;
  const auto mu = LimitMeasure::uniform(lambda, 8);
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    const auto r = recovery_sequence(mu, eps, kMStar);
    double s = 0.0;
    for (const auto& d : r.config.droplets) s += d.mass;
    EXPECT_EQ(s, r.config.spec.mass_budget()) << eps;
    EXPECT_NO_THROW(validate(r.config));
    EXPECT_GE(r.min_spacing, r.spacing_lower);
    EXPECT_LE(r.min_spacing, r.spacing_upper);
    const double expected = std::ceil(lambda / (std::cbrt(eps) * kMStar) - 1e-12);
    EXPECT_EQ(static_cast<double>(r.config.droplets.size()), expected) << eps;
  }
}

TEST(Recovery, RandomBoundedDensitiesSatisfyInvariants) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 8; ++t) {
    const auto mu = LimitMeasure::density(4, random_density(rng, 4, 3.0, 6.0));
    RecoveryOptions opts;
    opts.delta = 0.5;
    opts.spacing_lower = 1e-9;
    opts.spacing_upper_factor = 1e18;
    const auto r = recovery_sequence(mu, 1e-6, kMStar, opts);
    EXPECT_NO_THROW(validate(r.config)) << t;
    double s = 0.0;
    for (const auto& d : r.config.droplets) s += d.mass;
    EXPECT_EQ(s, r.config.spec.mass_budget());
    ASSERT_EQ(r.counts.size(), 8u);
  }
}

TEST(Recovery, CountsTrackCubeMass) {
  const double lambda = 5.0;
  const auto mu = LimitMeasure::sampled(
      16, [&](const Vec3& x) { return lambda * (1.0 + 0.5 * std::cos(2 * kPi * x.x)); });
  RecoveryOptions opts;
  opts.delta = 0.5;
  opts.spacing_lower = 1e-9;
  opts.spacing_upper_factor = 1e18;
  const double eps = 1e-6;
  const auto r = recovery_sequence(mu, eps, kMStar, opts);
  ASSERT_EQ(r.cubes_per_side, 2);
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    const double ideal = r.cube_masses[i] / (std::cbrt(eps) * kMStar);
    EXPECT_LE(std::abs(r.counts[i] - ideal), 1.0) << i;
  }
}

TEST(Recovery, InfeasibleSpacingIsReported) {
  const auto mu = LimitMeasure::uniform(5.0, 4);
  RecoveryOptions opts;
  opts.spacing_lower = 10.0;
  EXPECT_THROW(recovery_sequence(mu, 1e-6, kMStar, opts), InfeasibleError);
  EXPECT_THROW(recovery_sequence(LimitMeasure::atomic({Vec3{}}, {1.0}), 1e-6, kMStar), ParameterError);
}

TEST(ScalingBalance, ExponentsAndRatios) {
  const auto a = scaling_balance(1e-6, kMStar, 0.1);
  const double r = std::cbrt(1e-6) * std::cbrt(3 * kMStar / (4 * kPi));
  EXPECT_NEAR(a.surface / a.self, 1e-6 / (r * r * r), 1e-12 * a.surface / a.self);
  const auto b = scaling_balance(1e-6, kMStar, 0.2);
  EXPECT_NEAR(a.interaction / b.interaction, 8.0, 1e-12);
  // With d = eps^{1/9}, all three scale as eps^{5/3}.
  std::vector<double> logs_eps, s1, s2, s3;
  for (double e : {1e-3, 1e-5, 1e-7, 1e-9}) {
    const auto c = scaling_balance(e, kMStar, std::pow(e, 1.0 / 9.0));
    logs_eps.push_back(std::log(e));
    s1.push_back(std::log(c.surface));
    s2.push_back(std::log(c.self));
    s3.push_back(std::log(c.interaction));
  }
  for (std::size_t i = 1; i < logs_eps.size(); ++i) {
    const double dx = logs_eps[i] - logs_eps[i - 1];
    EXPECT_NEAR((s1[i] - s1[i - 1]) / dx, 5.0 / 3.0, 1e-12);
    EXPECT_NEAR((s2[i] - s2[i - 1]) / dx, 5.0 / 3.0, 1e-12);
    EXPECT_NEAR((s3[i] - s3[i - 1]) / dx, 5.0 / 3.0, 1e-12);
  }
  EXPECT_THROW(scaling_balance(-1.0, 1.0, 1.0), ParameterError);
}

SweepRecord golden_record() {
  SweepRecord rec;
  rec.manifest = "00000000deadbeef";
  SweepRow a;
  a.epsilon = 1e-4;
  a.lambda = 0.5;
  a.n_droplets = 1;
  a.scaled_total = 1.25;
  a.sup_v = 0.75;
  a.min_v = -0.03125;
  a.max_diameter = 2.75;
  a.mu_octant_deviation = 2.0;
  a.nu_octant_deviation = 1.96875;
  a.masses = {10.75};
  SweepRow b = a;
  b.epsilon = 1e-6;
  b.n_droplets = 2;
  b.scaled_total = 1.125;
  b.sup_v = 1.5;
  b.min_v = -0.015625;
  b.max_diameter = 3.625;
  b.mu_octant_deviation = 0.0;
  b.nu_octant_deviation = 0.01;
  b.masses = {25.0, 25.0};
  SweepRow c;
  c.epsilon = 3e-7;
  c.lambda = 0.5;
  c.status = "error: init_lattice failed, no room";
  rec.rows = {a, b, c};
  return rec;
}

TEST(SweepCsv, GoldenBytes) {
  const std::string golden = read_file(std::string(OKDROP_TEST_DATA) + "/sweep_golden.csv");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(sweep_csv(golden_record()), golden);
}

TEST(SweepCsv, RoundTrip) {
  const auto rec = golden_record();
  const auto back = parse_sweep_csv(sweep_csv(rec));
  EXPECT_EQ(back.manifest, rec.manifest);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[1].masses, rec.rows[1].masses);
  EXPECT_EQ(sweep_csv(back), sweep_csv(rec));
  try {
    parse_sweep_csv("epsilon,x\n1,2\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(SweepCsv, LocaleIndependentFormatting) {
  EXPECT_EQ(format_number(0.5), "5.0000000000e-01");
  EXPECT_EQ(format_number(-1234.5), "-1.2345000000e+03");
  EXPECT_EQ(format_number(0.0), "0.0000000000e+00");
}

SweepRecord synthetic_recovery_sweep(double lambda) {
  SweepRecord rec;
  rec.manifest = "synthetic";
  const auto mu = LimitMeasure::uniform(lambda, 8);
  for (double eps : {1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    const auto r = recovery_sequence(mu, eps, kMStar);
    const EwaldKernel k(r.config.spec.side_length());
    SweepRow row;
    row.epsilon = eps;
    row.lambda = lambda;
    row.n_droplets = static_cast<int>(r.config.droplets.size());
    row.scaled_total = total_energy(r.config, k).scaled_total;
    for (const auto& d : r.config.droplets) row.masses.push_back(d.mass);
    rec.rows.push_back(row);
  }
  return rec;
}

TEST(Statistics, SlopeOnRecoverySweep) {
  const auto rep = droplet_statistics(synthetic_recovery_sweep(5.0), kMStar, kFStar);
  EXPECT_NEAR(rep.count_slope, -1.0 / 3.0, 0.05);
  ASSERT_EQ(rep.rows.size(), 5u);
  EXPECT_GT(rep.rows.back().fraction_near_m_star, 0.5);
  // The excess over lambda f* shrinks in magnitude along the sweep.
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    EXPECT_LT(std::abs(rep.rows[i].energy_gap), std::abs(rep.rows[i - 1].energy_gap)) << i;
}

TEST(Statistics, PureAndDeterministic) {
  const auto sweep = synthetic_recovery_sweep(5.0);
  const std::string csv = sweep_csv(sweep);
  const auto a = to_json(droplet_statistics(parse_sweep_csv(csv), kMStar, kFStar));
  const auto b = to_json(droplet_statistics(parse_sweep_csv(csv), kMStar, kFStar));
  EXPECT_EQ(a, b);
  const auto dir = std::filesystem::temp_directory_path() / "okdrop_stats_tables";
  write_statistics_tables(droplet_statistics(sweep, kMStar, kFStar), dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "count_scaling.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "energy_gap.csv"));
}

TEST(Statistics, RejectsInsufficientSweeps) {
  auto sweep = synthetic_recovery_sweep(5.0);
  SweepRecord one{sweep.manifest, {sweep.rows[0]}};
  EXPECT_THROW(droplet_statistics(one, kMStar, kFStar), ParameterError);
  SweepRecord narrow{sweep.manifest, {sweep.rows[0], sweep.rows[1]}};
  narrow.rows.push_back(sweep.rows[1]);
  narrow.rows.back().epsilon = 5e-5;
  EXPECT_THROW(droplet_statistics(narrow, kMStar, kFStar), ParameterError);
}

}  // namespace
