#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"
#include "okdrop/minimizer.hpp"
#include "okdrop/torus_energy.hpp"

using namespace okdrop;

namespace {

constexpr double kPi = std::numbers::pi;

// 16 droplets of radius 2 on a BCC lattice in a torus of side 16.
DropletConfig bcc16() {
  const double l = 16.0;
  const double m = 4.0 / 3.0 * kPi * 8.0;
  const TorusSpec spec(1.0 / (l * l * l), 16.0 * m / l);
  DropletConfig c{spec, {}};
  const auto masses = equal_masses(spec.mass_budget(), 16);
  const auto sites = lattice_sites(Lattice::kBCC, 2, l / 2.0);
  for (std::size_t i = 0; i < sites.size(); ++i) c.droplets.push_back({sites[i] + Vec3{1.0, 2.0, 3.0}, masses[i]});
  return c;
}

DropletConfig random_config(std::uint64_t seed, int n, double l) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, l);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  std::vector<Droplet> ds;
  std::vector<double> raw;
  double sum = 0.0;
  while (static_cast<int>(ds.size()) < n) {
    const Droplet d{Vec3{u(rng), u(rng), u(rng)}, 20.0 * w(rng)};
    bool ok = true;
    for (const auto& e : ds) ok = ok && torus_distance(d.center, e.center, l) > d.radius() + e.radius() + 0.5;
    if (ok) {
      ds.push_back(d);
      sum += d.mass;
    }
  }
  const TorusSpec spec(1.0 / (l * l * l), sum / l);
  DropletConfig c{spec, ds};
  normalize_masses(c);
  return c;
}

TEST(TorusSpec, ScalingAndAdmissibility) {
  const TorusSpec s(1e-6, 0.5);
  EXPECT_NEAR(s.side_length(), 100.0, 1e-10);
  EXPECT_NEAR(s.mass_budget(), 50.0, 1e-10);
  EXPECT_NEAR(s.background_density(), 0.5e-4, 1e-16);
  EXPECT_THROW(TorusSpec(0.2, 5.0), ParameterError);
  EXPECT_THROW(TorusSpec(0.0, 1.0), ParameterError);
  EXPECT_THROW(TorusSpec(1e-3, -1.0), ParameterError);
}

TEST(Masses, EqualMassesSumExactly) {
  for (int n : {1, 3, 7, 16, 129}) {
    const double total = 123.456789;
    const auto m = equal_masses(total, n);
    double s = 0.0;
    for (double x : m) s += x;
    EXPECT_EQ(s, total) << n;
  }
}

TEST(Validate, CatchesOverlapAndBudget) {
  DropletConfig c = bcc16();
  EXPECT_NO_THROW(validate(c));
  c.droplets[1].center = c.droplets[0].center + Vec3{1.0, 0.0, 0.0};
  EXPECT_THROW(validate(c), ConfigurationError);
  c = bcc16();
  c.droplets[0].mass *= 1.01;
  EXPECT_THROW(validate(c), ConfigurationError);
  c = bcc16();
  c.droplets[0].center = c.droplets[0].center + Vec3{16.0, -32.0, 0.0};
  EXPECT_NO_THROW(validate(c));
}

TEST(CoulombEnergy, TwoRoutesAgree) {
  const EwaldKernel k16(16.0);
  const DropletConfig c = bcc16();
  EXPECT_NEAR(coulomb_energy_spectral(c, k16) / coulomb_energy(c, k16), 1.0, 1e-8);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DropletConfig r = random_config(seed, 6, 14.0);
    const EwaldKernel k(14.0);
    EXPECT_NEAR(coulomb_energy_spectral(r, k) / coulomb_energy(r, k), 1.0, 1e-8) << seed;
  }
}

TEST(CoulombEnergy, KernelSideMustMatch) {
  EXPECT_THROW(coulomb_energy(bcc16(), EwaldKernel(15.0)), ParameterError);
}

TEST(TotalEnergy, BreakdownAddsUp) {
  const DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  const auto e = total_energy(c, k);
  EXPECT_NEAR(e.total, e.surface + e.coulomb, 1e-12 * e.total);
  EXPECT_NEAR(e.scaled_total, std::cbrt(c.spec.epsilon()) * e.total, 1e-12 * e.total);
  double surf = 0.0, per = 0.0;
  for (std::size_t i = 0; i < c.droplets.size(); ++i) {
    surf += e.per_droplet[i].surface;
    per += e.per_droplet[i].surface + e.per_droplet[i].self + e.per_droplet[i].interaction;
  }
  EXPECT_NEAR(surf, e.surface, 1e-10);
  EXPECT_NEAR(per, e.total, 1e-9 * e.total);
  const double m = c.droplets[0].mass;
  EXPECT_NEAR(e.per_droplet[0].surface, drop::ball_surface_energy(m), 1e-10);
}

TEST(Potential, ContinuousAcrossTheBallSurface) {
  const DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  const Vec3 ctr = c.droplets[3].center;
  const double r = c.droplets[3].radius();
  const Vec3 dir = Vec3{1.0, 2.0, 2.0} * (1.0 / 3.0);
  const double in = potential_at(c, k, ctr + dir * (r - 1e-7));
  const double out = potential_at(c, k, ctr + dir * (r + 1e-7));
  EXPECT_NEAR(in, out, 1e-6);
}

TEST(Potential, EnergyIsHalfTheIntegralOfPotentialTimesDensity) {
  // 1/2 sum_i m_i <v>_i, ball averages over 26 rays and 40 radii.
  const DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  double half = 0.0;
  const int nr = 40, nd = 26;
  std::vector<Vec3> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int d = -1; d <= 1; ++d)
        if (a || b || d) dirs.push_back(Vec3{double(a), double(b), double(d)} * (1.0 / norm(Vec3{double(a), double(b), double(d)})));
  ASSERT_EQ(static_cast<int>(dirs.size()), nd);
  for (const auto& dr : c.droplets) {
    const double r = dr.radius();
    double avg = 0.0, wsum = 0.0;
    for (int i = 0; i < nr; ++i) {
      const double s = (i + 0.5) * r / nr;
      for (const auto& u : dirs) {
        avg += s * s * potential_at(c, k, dr.center + u * s);
        wsum += s * s;
      }
    }
    half += 0.5 * (avg / wsum) * dr.mass;
  }
  EXPECT_NEAR(half / coulomb_energy(c, k), 1.0, 1e-3);
}

TEST(PotentialField, DirichletIdentityOn64Grid) {
  const DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  const auto f = potential_field(c, k, 64);
  const double e = coulomb_energy(c, k);
  EXPECT_NEAR(f.dirichlet_energy / e, 1.0, 1e-3);
  EXPECT_NEAR(f.mean, 0.0, 1e-12);
  EXPECT_LT(std::abs(f.sampled_mean_offset), 1e-4);
  for (const auto& [i, j, kk] : {std::array<int, 3>{0, 0, 0}, {5, 17, 40}, {63, 31, 8}}) {
    const double h = 16.0 / 64;
    EXPECT_NEAR(f.at(i, j, kk) + f.sampled_mean_offset, potential_at(c, k, Vec3{i * h, j * h, kk * h}), 1e-8);
  }
  EXPECT_GE(f.sup_norm, std::max(std::abs(f.minimum), std::abs(f.maximum)) - 1e-15);
  EXPECT_LE(f.gradient_bound_residual, 1e-9);
  EXPECT_THROW(potential_field(c, k, 8), ParameterError);
}

TEST(EnergyMeasure, TotalsAndSymmetry) {
  const DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  const auto e = total_energy(c, k);
  const auto cg = energy_measure(c, k, 2);
  EXPECT_NEAR(cg.mu_total, c.spec.lambda(), 1e-12 * c.spec.lambda());
  EXPECT_NEAR(cg.nu_total, e.scaled_total, 1e-10 * e.scaled_total);
  ASSERT_EQ(cg.mu.size(), 8u);
  EXPECT_THROW(energy_measure(c, k, 1), ParameterError);
}

TEST(EnergyMeasure, TranslationInvariantTotals) {
  DropletConfig c = bcc16();
  const EwaldKernel k(16.0);
  for (auto& d : c.droplets) d.center = d.center + Vec3{0.37, 1.91, 2.6};
  const auto cg = energy_measure(c, k, 3);
  EXPECT_NEAR(cg.mu_total, c.spec.lambda(), 1e-12 * c.spec.lambda());
}

TEST(BallBoxVolume, PartitionOfUnity) {
  const Vec3 ctr{0.3, -0.2, 0.45};
  const double r = 1.1;
  double sum = 0.0;
  const double edges[4] = {-2.0, -0.1, 0.7, 2.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int kk = 0; kk < 3; ++kk)
        sum += ball_box_volume(ctr, r, Vec3{edges[i], edges[j], edges[kk]}, Vec3{edges[i + 1], edges[j + 1], edges[kk + 1]});
  EXPECT_NEAR(sum, 4.0 / 3.0 * kPi * r * r * r, 1e-13);
  // Half space through the centre.
  EXPECT_NEAR(ball_box_volume(ctr, r, Vec3{-5, -5, -5}, Vec3{ctr.x, 5, 5}), 2.0 / 3.0 * kPi * r * r * r, 1e-13);
  // Octant at the centre.
  EXPECT_NEAR(ball_box_volume(ctr, r, ctr, ctr + Vec3{5, 5, 5}), kPi * r * r * r / 6.0, 1e-13);
}

TEST(ConfigJson, RoundTripIsExact) {
  const DropletConfig c = bcc16();
  const auto path = (std::filesystem::temp_directory_path() / "okdrop_roundtrip.json").string();
  write_config(path, c, "abc123");
  const DropletConfig back = read_config(path);
  ASSERT_EQ(back.droplets.size(), c.droplets.size());
  for (std::size_t i = 0; i < c.droplets.size(); ++i) {
    EXPECT_EQ(back.droplets[i].mass, c.droplets[i].mass);
    EXPECT_EQ(back.droplets[i].center.x, c.droplets[i].center.x);
  }
  EXPECT_EQ(back.spec.epsilon(), c.spec.epsilon());
  EXPECT_EQ(to_json(back, "abc123"), to_json(c, "abc123"));
  EXPECT_THROW(config_from_json("{\"schema\": \"other\"}"), ValidationError);
  EXPECT_THROW(config_from_json("not json"), ValidationError);
}

}  // namespace
