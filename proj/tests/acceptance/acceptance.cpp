// Acceptance checks, one per criterion: `okdrop_acceptance <n>` prints a single
// PASS/FAIL line and exits 0 on pass, 1 on fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"
#include "okdrop/gamma_analysis.hpp"
#include "okdrop/harness.hpp"
#include "real_space_oracle.hpp"

namespace fs = std::filesystem;
using namespace okdrop;

namespace {

constexpr double kPi = std::numbers::pi;

struct Check {
  std::string text;
  bool ok = true;

  void add(bool pass, const std::string& what) {
    ok = ok && pass;
    if (!text.empty()) text += "; ";
    text += what + (pass ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void runtime(Check& c, std::chrono::steady_clock::time_point t0, double budget) {
  const double s = seconds_since(t0);
  c.add(s < budget, "runtime " + fmt("%.2f", s) + " s < " + fmt("%g", budget) + " s");
}

Check criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const double target = 10.0 * kPi;
  const double argmin = drop::argmin_f_ball(1.0, 200.0);
  const double rel = std::abs(argmin / target - 1.0);
  c.add(rel < 1e-8, "argmin rel err " + fmt("%.2e", rel) + " < 1e-8");
  const double f_star = drop::f_ball(argmin);
  const double closed = std::pow(3.0, 5.0 / 3.0) * std::pow(2.0, -2.0 / 3.0) * std::pow(5.0, -1.0 / 3.0);
  c.add(std::abs(f_star - closed) < 1e-12, "f(argmin) = " + fmt("%.8f", f_star) + " vs closed form " + fmt("%.8f", closed));
  c.add(std::abs(closed - 2.29893) < 5e-6, "f* ~ 2.29893");
  runtime(c, t0, 1.0);
  return c;
}

Check criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const double closed = 40.0 * kPi / 3.0 * (std::cbrt(2.0) + 1.0 / std::cbrt(2.0) - 1.0);
  const double root = drop::m_c1_bisection();
  const double rel = std::abs(root / closed - 1.0);
  c.add(rel < 1e-9, "bisection " + fmt("%.10f", root) + " vs closed " + fmt("%.10f", closed) + ", rel " + fmt("%.1e", rel) + " < 1e-9");
  c.add(std::abs(closed - 44.134) < 5e-4, "m_c1 ~ 44.134");
  runtime(c, t0, 1.0);
  return c;
}

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

Check criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const EwaldKernel g(1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    worst = std::max(worst, std::abs(g.green(x) - okdrop::testing::green_real_space(x.x, x.y, x.z)));
  }
  c.add(worst < 1e-6, "50 points max |G - image sum| " + fmt("%.2e", worst) + " < 1e-6");
  const DropletConfig config = bcc16();
  const EwaldKernel k(config.spec.side_length());
  const double e = coulomb_energy(config, k);
  const auto field = potential_field(config, k, 64);
  const double rel = std::abs(field.dirichlet_energy / e - 1.0);
  c.add(rel < 1e-3, "Dirichlet identity 64^3 rel " + fmt("%.2e", rel) + " < 1e-3");
  runtime(c, t0, 60.0);
  return c;
}

Check criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const double mc = drop::m_c1();
  int bad_single = 0, bad_split = 0;
  for (int i = 0; i <= 200; ++i) {
    const double m = 0.5 + (mc - 0.5) * i / 200.0;
    bad_single += drop::generalized_minimum(m).count != 1;
  }
  for (int i = 0; i <= 200; ++i) {
    const double m = mc * (1.05 + 1.95 * i / 200.0);
    bad_split += drop::generalized_minimum(m).count < 2;
  }
  c.add(bad_single == 0, "n = 1 on (0, m_c1]: " + std::to_string(bad_single) + " violations");
  c.add(bad_split == 0, "n >= 2 on [1.05, 3] m_c1: " + std::to_string(bad_split) + " violations");
  double worst = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double m = k * 10.0 * kPi;
    worst = std::max(worst, std::abs(drop::generalized_minimum(m).energy / m - drop::f_star_closed_form()));
  }
  c.add(worst < 1e-10, "f(k 10pi) - f* max " + fmt("%.1e", worst) + " < 1e-10");
  runtime(c, t0, 10.0);
  return c;
}

Check criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const double d_star = std::abs(drop::multiplier(10.0 * kPi) - drop::f_star_closed_form());
  c.add(d_star < 1e-6, "lambda_{m*} - f* " + fmt("%.1e", d_star) + " < 1e-6");
  double worst = 0.0;
  for (double m : {1.0, 5.0, 12.0, 20.0, 31.0, 40.0}) {
    const double r = drop::ball_radius(m);
    worst = std::max(worst, std::abs(drop::multiplier(m) - (2.0 / r + r * r / 3.0)));
  }
  c.add(worst < 1e-6, "lambda_m - (2/r + r^2/3) max " + fmt("%.1e", worst) + " < 1e-6");
  runtime(c, t0, 1.0);
  return c;
}

ExperimentConfig macro_sweep_config(const std::string& config_path, const fs::path& out) {
  ExperimentConfig cfg = validate_config_file(config_path);
  cfg.output_dir = out.string();
  return cfg;
}

Check criterion6(const std::string& config_path, const fs::path& work, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const ExperimentConfig cfg = macro_sweep_config(config_path, work / "criterion6");
  const SweepRecord sweep = run_sweep(cfg, threads);
  int failed = 0;
  for (const auto& r : sweep.rows) failed += r.status != "ok";
  c.add(failed == 0, std::to_string(sweep.rows.size() - failed) + "/" + std::to_string(sweep.rows.size()) + " rows ok");
  const StatisticsReport rep = droplet_statistics(sweep, drop::m_star_closed_form(), drop::f_star_closed_form());
  write_text((work / "criterion6" / "report.json").string(), to_json(rep));
  write_statistics_tables(rep, (work / "criterion6").string());

  std::string counts;
  for (const auto& r : rep.rows) counts += (counts.empty() ? "" : ",") + std::to_string(r.n_droplets);
  c.add(std::abs(rep.count_slope + 1.0 / 3.0) <= 0.07,
        "(a) slope " + fmt("%.3f", rep.count_slope) + " in -1/3 +- 0.07 (N = " + counts + ")");
  const double last_gap = rep.rows.back().energy_gap;
  c.add(rep.gap_positive && rep.gap_nonincreasing && last_gap < 0.1,
        "(b) gap positive " + std::string(rep.gap_positive ? "yes" : "no") + ", nonincreasing " +
            (rep.gap_nonincreasing ? "yes" : "no") + ", final " + fmt("%.4f", last_gap));
  const double frac = rep.rows.back().fraction_near_m_star;
  c.add(frac >= 0.8, "(c) near-m* fraction " + fmt("%.2f", frac) + " >= 0.80");
  c.add(rep.mu_deviation_decreasing, "(d) mu octant deviation decreasing");
  c.add(rep.nu_deviation_decreasing, "(e) nu octant deviation decreasing");
  c.add(rep.sup_v_nonincreasing, "(f) sup|v| nonincreasing");
  runtime(c, t0, 7200.0);
  return c;
}

std::string recovery_table(double lambda, const std::vector<double>& eps, std::vector<double>& excess) {
  const auto mu = LimitMeasure::uniform(lambda, 8);
  const double e0 = e0_energy(mu, EwaldKernel(1.0), drop::f_star_closed_form());
  std::ostringstream csv;
  csv << "epsilon,n_droplets,scaled_total,e0,excess\n";
  for (double e : eps) {
    const auto r = recovery_sequence(mu, e, drop::m_star_closed_form());
    const EwaldKernel k(r.config.spec.side_length());
    const double s = total_energy(r.config, k).scaled_total;
    excess.push_back(s - e0);
    csv << format_number(e) << ',' << r.config.droplets.size() << ',' << format_number(s) << ','
        << format_number(e0) << ',' << format_number(s - e0) << "\n";
  }
  return csv.str();
}

Check criterion7(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  std::vector<double> excess;
  const std::string csv = recovery_table(5.0, {1e-4, 1e-5, 1e-6}, excess);
  write_text((work / "criterion7" / "recovery.csv").string(), csv);
  bool positive = true, decreasing = true;
  for (std::size_t i = 0; i < excess.size(); ++i) {
    positive = positive && excess[i] > 0.0;
    if (i > 0) decreasing = decreasing && excess[i] < excess[i - 1];
  }
  std::string list;
  for (double e : excess) list += (list.empty() ? "" : ", ") + fmt("%.4f", e);
  c.add(positive, "excess over E0 positive (" + list + ")");
  c.add(decreasing, "excess decreasing along eps");
  runtime(c, t0, 600.0);
  return c;
}

Check criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const EwaldKernel unit(1.0);
  const double f_star = drop::f_star_closed_form();
  bool exact = true;
  for (double lambda : {0.5, 1.0, 5.0}) exact = exact && e0_energy(LimitMeasure::uniform(lambda, 16), unit, f_star) == lambda * f_star;
  c.add(exact, "E0(uniform) == lambda f* bitwise");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  int positive = 0;
  double min_margin = 1e300;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(16 * 16 * 16), b(a.size());
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const double m = convexity_margin(LimitMeasure::density(16, a), LimitMeasure::density(16, b));
    positive += m > 0.0;
    min_margin = std::min(min_margin, m);
  }
  c.add(positive == 20, "convexity margin positive " + std::to_string(positive) + "/20 (min " + fmt("%.2e", min_margin) + ")");
  bool rejected = false;
  try {
    e0_energy(LimitMeasure::atomic({Vec3{0.25, 0.5, 0.75}}, {1.0}), unit, f_star);
  } catch (const DomainError& e) {
    rejected = std::string(e.what()).find("infinite Coulomb self-energy") != std::string::npos;
  }
  c.add(rejected, "atomic measure rejected");
  runtime(c, t0, 10.0);
  return c;
}

Check criterion9(const std::string& config_path, const fs::path& work, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  std::string first, second;
  for (const char* run : {"a", "b"}) {
    const ExperimentConfig cfg = macro_sweep_config(config_path, work / "criterion9" / run);
    run_sweep(cfg, threads);
    (run[0] == 'a' ? first : second) = read_text((work / "criterion9" / run / "sweep.csv").string());
  }
  c.add(!first.empty() && first == second, "sweep.csv byte-identical across reruns (" + std::to_string(first.size()) + " bytes)");
  std::vector<double> ex1, ex2;
  const std::string r1 = recovery_table(5.0, {1e-4, 1e-5, 1e-6}, ex1);
  const std::string r2 = recovery_table(5.0, {1e-4, 1e-5, 1e-6}, ex2);
  c.add(r1 == r2, "recovery table byte-identical");
  runtime(c, t0, 7200.0);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"okdrop acceptance checks"};
  int criterion = 0;
  std::string config_path = OKDROP_MACRO_SWEEP_CONFIG;
  std::string work = OKDROP_ACCEPTANCE_WORK;
  int threads = 2;
  app.add_option("criterion", criterion, "criterion number 1-9")->required()->check(CLI::Range(1, 9));
  app.add_option("--config", config_path, "experiment file for criteria 6 and 9");
  app.add_option("--work", work, "directory for generated artifacts");
  app.add_option("--threads", threads, "sweep workers")->check(CLI::Range(1, 256));
  CLI11_PARSE(app, argc, argv);

  static const char* names[] = {"",
                                "closed-form optimal mass",
                                "fission threshold",
                                "kernel oracle equivalence",
                                "generalized minimizers",
                                "stationarity identities",
                                "macroscopic-limit trend",
                                "recovery upper bound",
                                "limit functional evaluator",
                                "reproducibility"};
  Check c;
  try {
    switch (criterion) {
      case 1: c = criterion1(); break;
      case 2: c = criterion2(); break;
      case 3: c = criterion3(); break;
      case 4: c = criterion4(); break;
      case 5: c = criterion5(); break;
      case 6: c = criterion6(config_path, work, threads); break;
      case 7: c = criterion7(work); break;
      case 8: c = criterion8(); break;
      case 9: c = criterion9(config_path, work, threads); break;
    }
  } catch (const std::exception& e) {
    c.ok = false;
    c.text = std::string("exception: ") + e.what();
  }
  std::printf("criterion %d %s: %s: %s\n", criterion, c.ok ? "PASS" : "FAIL", names[criterion], c.text.c_str());
  return c.ok ? 0 : 1;
}
