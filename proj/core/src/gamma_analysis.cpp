#include "okdrop/gamma_analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int signed_frequency(int a, int n) { return a <= n / 2 ? a : a - n; }

double interval_overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("sweep csv: malformed number '" + s + "'");
  return v;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 10);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

LimitMeasure LimitMeasure::uniform(double lambda, int n) {
  return density(n, std::vector<double>(static_cast<std::size_t>(n) * n * n, lambda));
}

LimitMeasure LimitMeasure::density(int n, std::vector<double> values) {
  if (n < 1 || values.size() != static_cast<std::size_t>(n) * n * n)
    throw ParameterError("LimitMeasure: expected n^3 cell values");
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("LimitMeasure: density must be nonnegative");
    sum += v;
  }
  LimitMeasure mu;
  mu.kind_ = Kind::kDensity;
  mu.n_ = n;
  mu.values_ = std::move(values);
  mu.total_ = sum / static_cast<double>(mu.values_.size());
  if (!(mu.total_ > 0.0)) throw ParameterError("LimitMeasure: total mass must be positive");
  return mu;
}

LimitMeasure LimitMeasure::sampled(int n, const std::function<double(const Vec3&)>& g) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) values.push_back(g(Vec3{(i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n}));
  return density(n, std::move(values));
}

LimitMeasure LimitMeasure::atomic(std::vector<Vec3> points, std::vector<double> weights) {
  if (points.size() != weights.size() || points.empty())
    throw ParameterError("LimitMeasure: atoms need one weight per point");
  LimitMeasure mu;
  mu.kind_ = Kind::kAtomic;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("LimitMeasure: atom weights must be nonnegative");
    mu.total_ += w;
  }
  mu.points_ = std::move(points);
  mu.weights_ = std::move(weights);
  return mu;
}

double LimitMeasure::mass_in_box(const Vec3& lo, const Vec3& hi) const {
  if (kind_ == Kind::kAtomic) {
    double sum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Vec3 p = wrap_into_cell(points_[i], 1.0);
      if (p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y && p.z >= lo.z && p.z < hi.z)
        sum += weights_[i];
    }
    return sum;
  }
  const int n = n_;
  const double h = 1.0 / n;
  std::vector<double> wx(n), wy(n), wz(n);
  for (int i = 0; i < n; ++i) {
    wx[i] = interval_overlap(lo.x, hi.x, i * h, (i + 1) * h);
    wy[i] = interval_overlap(lo.y, hi.y, i * h, (i + 1) * h);
    wz[i] = interval_overlap(lo.z, hi.z, i * h, (i + 1) * h);
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (wx[i] == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (wy[j] == 0.0) continue;
      const double* row = &values_[(static_cast<std::size_t>(i) * n + j) * n];
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += row[k] * wz[k];
      sum += wx[i] * wy[j] * s;
    }
  }
  return sum;
}

double coulomb_form(int n, const std::vector<double>& values) {
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  if (values.size() != total) throw ParameterError("coulomb_form: expected n^3 values");
  const int nz = n / 2 + 1;
  double* in = static_cast<double*>(fftw_malloc(sizeof(double) * total));
  fftw_complex* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n * nz));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_3d(n, n, n, in, out, FFTW_ESTIMATE);
  }
  std::copy(values.begin(), values.end(), in);
  fftw_execute(plan);
  double sum = 0.0;
  const double norm_factor = 1.0 / static_cast<double>(total);
  for (int a = 0; a < n; ++a) {
    const int fa = signed_frequency(a, n);
    for (int b = 0; b < n; ++b) {
      const int fb = signed_frequency(b, n);
      for (int c = 0; c < nz; ++c) {
        if (fa == 0 && fb == 0 && c == 0) continue;
        const std::size_t idx = (static_cast<std::size_t>(a) * n + b) * nz + c;
        const double re = out[idx][0] * norm_factor;
        const double im = out[idx][1] * norm_factor;
        const double k2 = 4.0 * kPi * kPi * (fa * fa + fb * fb + c * c);
        const double weight = (c == 0 || 2 * c == n) ? 1.0 : 2.0;
        sum += weight * (re * re + im * im) / k2;
      }
    }
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return 0.5 * sum;
}

double e0_energy(const LimitMeasure& mu, const EwaldKernel& kernel, double f_star) {
  if (std::abs(kernel.side_length() - 1.0) > 1e-12)
    throw ParameterError("e0_energy: the limit functional lives on the unit torus");
  if (mu.kind() == LimitMeasure::Kind::kAtomic) {
    for (double w : mu.weights())
      if (w > 0.0)
        throw DomainError("infinite Coulomb self-energy: atomic measures have no finite Coulomb energy");
    return mu.total_mass() * f_star;
  }
  return mu.total_mass() * f_star + coulomb_form(mu.grid_n(), mu.values());
}

double convexity_margin(const LimitMeasure& mu1, const LimitMeasure& mu2) {
  if (mu1.kind() != LimitMeasure::Kind::kDensity || mu2.kind() != LimitMeasure::Kind::kDensity ||
      mu1.grid_n() != mu2.grid_n())
    throw ParameterError("convexity_margin: needs two densities on the same grid");
  std::vector<double> diff(mu1.values().size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = mu1.values()[i] - mu2.values()[i];
  return 0.25 * coulomb_form(mu1.grid_n(), diff);
}

RecoveryResult recovery_sequence(const LimitMeasure& mu, double epsilon, double m_star,
                                 const RecoveryOptions& options) {
  if (mu.kind() != LimitMeasure::Kind::kDensity)
    throw ParameterError("recovery_sequence: needs a density bounded away from zero");
  if (!(m_star > 0.0)) throw ParameterError("recovery_sequence: m_star must be positive");
  const double floor_value = *std::min_element(mu.values().begin(), mu.values().end());
  if (!(floor_value > 0.0)) throw ParameterError("recovery_sequence: density must be bounded below by c > 0");

  const double lambda = mu.total_mass();
  const TorusSpec spec(epsilon, lambda);
  const double l = spec.side_length();
  const double delta = options.delta.value_or(std::pow(epsilon, 1.0 / 27.0));
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("recovery_sequence: delta must lie in (0, 1]");
  const int nc = std::max(1, static_cast<int>(std::floor(1.0 / delta)));
  const double cube = 1.0 / nc;
  const double eps13 = std::cbrt(epsilon);

  RecoveryResult out{DropletConfig{spec, {}}, nc, {}, {}, {}, 0.0, 0.0, 0.0};
  const double budget = spec.mass_budget();
  const double quantum = mass_quantum(budget);
  double placed = 0.0;
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      for (int k = 0; k < nc; ++k) {
        const Vec3 lo{i * cube, j * cube, k * cube};
        const double mass_q = mu.mass_in_box(lo, lo + Vec3{cube, cube, cube});
        const int count = std::max(1, static_cast<int>(std::ceil(mass_q / (eps13 * m_star) - 1e-12)));
        // Smallest arrangement with at least `count` sites.
        Lattice best_lattice = Lattice::kSC;
        int best_n = 0;
        long best_sites = -1;
        for (Lattice lat : {Lattice::kSC, Lattice::kBCC, Lattice::kFCC}) {
          const int b = lattice_basis_size(lat);
          int n = 1;
          while (static_cast<long>(b) * n * n * n < count) ++n;
          const long sites = static_cast<long>(b) * n * n * n;
          if (best_sites < 0 || sites < best_sites) {
            best_sites = sites;
            best_lattice = lat;
            best_n = n;
          }
        }
        const double a = cube * l / best_n;
        const auto sites = lattice_sites(best_lattice, best_n, a);
        const double droplet_mass = quantize_mass(mass_q * l / count, quantum);
        for (int s = 0; s < count; ++s) {
          const std::size_t idx = static_cast<std::size_t>((s + 0.5) * sites.size() / count);
          const Vec3 p = lo * l + sites[idx] + Vec3{0.25 * a, 0.25 * a, 0.25 * a};
          out.config.droplets.push_back({p, droplet_mass});
          placed += droplet_mass;
        }
        out.counts.push_back(count);
        out.cube_masses.push_back(mass_q);
        out.cube_lattices.push_back(best_lattice);
      }
    }
  }
  // Absorb the rounding remainder so the budget holds exactly.
  auto& last = out.config.droplets.back();
  last.mass = budget - (placed - last.mass);

  const auto& ds = out.config.droplets;
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ds.size(); ++a)
    for (std::size_t b = a + 1; b < ds.size(); ++b)
      spacing = std::min(spacing, torus_distance(ds[a].center, ds[b].center, l));
  if (ds.size() == 1) spacing = l;
  out.min_spacing = spacing / l;
  const double k_lower = options.spacing_lower.value_or(0.8 * std::cbrt(m_star / lambda));
  const double scale = std::pow(epsilon, 1.0 / 9.0);
  out.spacing_lower = k_lower * scale;
  out.spacing_upper = options.spacing_upper_factor * k_lower * scale;
  if (out.min_spacing < out.spacing_lower || out.min_spacing > out.spacing_upper)
    throw InfeasibleError("recovery_sequence: minimal spacing " + std::to_string(out.min_spacing) +
                          " (eps frame) outside [" + std::to_string(out.spacing_lower) + ", " +
                          std::to_string(out.spacing_upper) + "] for delta = " + std::to_string(delta) +
                          ", eps = " + std::to_string(epsilon));
  try {
    validate(out.config);
  } catch (const ConfigurationError& e) {
    throw InfeasibleError(std::string("recovery_sequence: ") + e.what());
  }
  return out;
}

ScalingBalance scaling_balance(double epsilon, double m, double lattice_spacing) {
  if (!(epsilon > 0.0 && m > 0.0 && lattice_spacing > 0.0))
    throw ParameterError("scaling_balance: inputs must be positive");
  const double r = std::cbrt(epsilon) * std::cbrt(3.0 * m / (4.0 * kPi));
  const double r2 = r * r;
  return {epsilon * r2, r2 * r2 * r, r2 * r2 * r2 / (lattice_spacing * lattice_spacing * lattice_spacing)};
}

std::string sweep_csv(const SweepRecord& record) {
  std::ostringstream out;
  out << "# okdrop sweep csv v1 manifest=" << record.manifest << "\n";
  out << "epsilon,lambda,n_droplets,scaled_total,sup_v,min_v,max_diameter,mu_octant_dev,"
         "nu_octant_dev,status,masses\n";
  for (const auto& r : record.rows) {
    out << format_number(r.epsilon) << ',' << format_number(r.lambda) << ',' << r.n_droplets << ','
        << format_number(r.scaled_total) << ',' << format_number(r.sup_v) << ','
        << format_number(r.min_v) << ',' << format_number(r.max_diameter) << ','
        << format_number(r.mu_octant_deviation) << ',' << format_number(r.nu_octant_deviation) << ',';
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << status << ',';
    for (std::size_t i = 0; i < r.masses.size(); ++i) out << (i ? ";" : "") << format_number(r.masses[i]);
    out << "\n";
  }
  return out.str();
}

SweepRecord parse_sweep_csv(const std::string& text) {
  SweepRecord record;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("manifest=");
      if (pos != std::string::npos) record.manifest = line.substr(pos + 9);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("epsilon,", 0) != 0) throw ValidationError("sweep csv: missing header", line_no, 1);
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw ValidationError("sweep csv: expected 11 columns", line_no, 1);
    SweepRow r;
    try {
      r.epsilon = parse_number(f[0]);
      r.lambda = parse_number(f[1]);
      r.n_droplets = std::stoi(f[2]);
      r.scaled_total = parse_number(f[3]);
      r.sup_v = parse_number(f[4]);
      r.min_v = parse_number(f[5]);
      r.max_diameter = parse_number(f[6]);
      r.mu_octant_deviation = parse_number(f[7]);
      r.nu_octant_deviation = parse_number(f[8]);
      r.status = f[9];
      if (!f[10].empty())
        for (const auto& m : split(f[10], ';')) r.masses.push_back(parse_number(m));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), line_no, 1);
    } catch (const std::exception&) {
      throw ValidationError("sweep csv: malformed row", line_no, 1);
    }
    record.rows.push_back(std::move(r));
  }
  return record;
}

StatisticsReport droplet_statistics(const SweepRecord& sweep, double m_star, double f_star) {
  std::vector<SweepRow> rows;
  for (const auto& r : sweep.rows)
    if (r.status == "ok") rows.push_back(r);
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.epsilon > b.epsilon; });
  if (rows.size() < 3) throw ParameterError("droplet_statistics: need at least three epsilon values");
  if (rows.front().epsilon / rows.back().epsilon < 100.0 * (1.0 - 1e-9))
    throw ParameterError("droplet_statistics: epsilons must span at least two decades");

  StatisticsReport report;
  report.manifest = sweep.manifest;
  report.m_star = m_star;
  report.f_star = f_star;
  report.lambda = rows.front().lambda;
  report.ansatz = drop::kBallAnsatz;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    const double x = std::log(r.epsilon);
    const double y = std::log(static_cast<double>(r.n_droplets));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  report.count_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  report.count_intercept = (sy - report.count_slope * sx) / n;

  for (const auto& r : rows) {
    StatisticsRow s;
    s.epsilon = r.epsilon;
    s.n_droplets = r.n_droplets;
    int near = 0;
    for (double m : r.masses)
      if (std::abs(m - m_star) < 0.1 * m_star) ++near;
    s.fraction_near_m_star = r.masses.empty() ? 0.0 : static_cast<double>(near) / r.masses.size();
    s.energy_gap = (r.scaled_total - r.lambda * f_star) / (r.lambda * f_star);
    s.sup_v = r.sup_v;
    s.min_v = r.min_v;
    s.mu_octant_deviation = r.mu_octant_deviation;
    s.nu_octant_deviation = r.nu_octant_deviation;
    s.diameter_over_eps13 = r.max_diameter;
    report.rows.push_back(s);
  }

  const auto& rs = report.rows;
  report.gap_positive = std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.energy_gap > 0.0; });
  report.gap_nonincreasing = report.mu_deviation_decreasing = report.nu_deviation_decreasing =
      report.sup_v_nonincreasing = true;
  for (std::size_t i = 1; i < rs.size(); ++i) {
    if (rs[i].energy_gap > rs[i - 1].energy_gap) report.gap_nonincreasing = false;
    if (!(rs[i].mu_octant_deviation < rs[i - 1].mu_octant_deviation)) report.mu_deviation_decreasing = false;
    if (!(rs[i].nu_octant_deviation < rs[i - 1].nu_octant_deviation)) report.nu_deviation_decreasing = false;
    if (rs[i].sup_v > rs[i - 1].sup_v) report.sup_v_nonincreasing = false;
  }
  return report;
}

std::string to_json(const StatisticsReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "okdrop/statistics";
  j["version"] = 1;
  j["manifest"] = report.manifest;
  j["ansatz"] = report.ansatz;
  j["lambda"] = report.lambda;
  j["m_star"] = report.m_star;
  j["f_star"] = report.f_star;
  j["count_slope"] = report.count_slope;
  j["count_intercept"] = report.count_intercept;
  j["count_slope_expected"] = -1.0 / 3.0;
  j["gap_positive"] = report.gap_positive;
  j["gap_nonincreasing"] = report.gap_nonincreasing;
  j["mu_deviation_decreasing"] = report.mu_deviation_decreasing;
  j["nu_deviation_decreasing"] = report.nu_deviation_decreasing;
  j["sup_v_nonincreasing"] = report.sup_v_nonincreasing;
  j["diameter_note"] = "diameter proxy 2 max r_i is exact only for ball unions";
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json o;
    o["epsilon"] = r.epsilon;
    o["n_droplets"] = r.n_droplets;
    o["fraction_near_m_star"] = r.fraction_near_m_star;
    o["energy_gap"] = r.energy_gap;
    o["sup_v"] = r.sup_v;
    o["min_v"] = r.min_v;
    o["mu_octant_deviation"] = r.mu_octant_deviation;
    o["nu_octant_deviation"] = r.nu_octant_deviation;
    o["diameter_over_eps13"] = r.diameter_over_eps13;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_statistics_tables(const StatisticsReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto table = [&](const std::string& name, const std::string& header, auto&& value) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + name + " in " + dir);
    out << "# manifest=" << report.manifest << "\n" << "epsilon," << header << "\n";
    for (const auto& r : report.rows) out << format_number(r.epsilon) << ',' << value(r) << "\n";
  };
  table("count_scaling.csv", "n_droplets", [](const StatisticsRow& r) { return std::to_string(r.n_droplets); });
  table("mass_clustering.csv", "fraction_near_m_star",
        [](const StatisticsRow& r) { return format_number(r.fraction_near_m_star); });
  table("energy_gap.csv", "relative_gap", [](const StatisticsRow& r) { return format_number(r.energy_gap); });
  table("potential.csv", "sup_v,min_v", [](const StatisticsRow& r) {
    return format_number(r.sup_v) + "," + format_number(r.min_v);
  });
  table("equidistribution.csv", "mu_octant_dev,nu_octant_dev", [](const StatisticsRow& r) {
    return format_number(r.mu_octant_deviation) + "," + format_number(r.nu_octant_deviation);
  });
  table("diameter.csv", "diameter_over_eps13",
        [](const StatisticsRow& r) { return format_number(r.diameter_over_eps13); });
}

}  // namespace okdrop
