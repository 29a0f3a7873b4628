#include "okdrop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"

namespace okdrop {
namespace fs = std::filesystem;

#ifndef OKDROP_VERSION
#define OKDROP_VERSION "0.0.0"
#endif

std::string version() { return OKDROP_VERSION; }

EwaldKernel KernelParams::make(double side_length) const {
  std::optional<double> alpha;
  if (alpha_times_side) alpha = *alpha_times_side / side_length;
  return EwaldKernel(side_length, k_cutoff, alpha);
}

namespace {

const std::vector<std::string> kScheduleKeys = {
    "seed",           "initial_temp", "cooling_rate", "steps_per_temp", "min_temp_ratio",
    "max_levels",     "min_mass",     "max_mass",     "weight_translate", "weight_exchange",
    "weight_split",   "weight_merge", "weight_shake"};

void reject_unknown(const kv::Document& doc, const std::vector<std::string>& known) {
  for (const auto& [key, entry] : doc) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    std::string msg = "unknown key '" + key + "'";
    const std::string hint = kv::closest(key, known);
    if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
    throw ValidationError(msg, entry.line, entry.column);
  }
}

const kv::Entry* find(const kv::Document& doc, const std::string& key) {
  const auto it = doc.find(key);
  return it == doc.end() ? nullptr : &it->second;
}

ValidationError at(const kv::Entry& e, const std::string& msg) {
  return ValidationError(msg, e.value.line, e.value.column);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

const std::vector<std::string>& experiment_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {"lambda",       "epsilons",   "seed",          "lattice",
                                  "droplet_mass", "chains",     "output_dir",    "schedule_file",
                                  "kernel.k_cutoff", "kernel.alpha_times_side", "analysis.subdivisions",
                                  "analysis.grid_n", "analysis.polish_tol", "analysis.polish_max_passes"};
    for (const auto& s : kScheduleKeys) k.push_back("schedule." + s);
    return k;
  }();
  return keys;
}

void apply_schedule_keys(const kv::Document& doc, const std::string& prefix, AnnealSchedule& s) {
  const auto get = [&](const std::string& key) { return find(doc, prefix + key); };
  if (auto e = get("seed")) {
    const long v = kv::as_integer(*e, prefix + "seed");
    if (v < 0) throw at(*e, "seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  if (auto e = get("initial_temp")) s.initial_temp = kv::as_number(*e, prefix + "initial_temp");
  if (auto e = get("cooling_rate")) s.cooling_rate = kv::as_number(*e, prefix + "cooling_rate");
  if (auto e = get("steps_per_temp")) s.steps_per_temp = static_cast<int>(kv::as_integer(*e, prefix + "steps_per_temp"));
  if (auto e = get("min_temp_ratio")) s.min_temp_ratio = kv::as_number(*e, prefix + "min_temp_ratio");
  if (auto e = get("max_levels")) s.max_levels = static_cast<int>(kv::as_integer(*e, prefix + "max_levels"));
  if (auto e = get("min_mass")) s.min_mass = kv::as_number(*e, prefix + "min_mass");
  if (auto e = get("max_mass")) s.max_mass = kv::as_number(*e, prefix + "max_mass");
  const char* names[kMoveKinds] = {"weight_translate", "weight_exchange", "weight_split", "weight_merge",
                                   "weight_shake"};
  for (int k = 0; k < kMoveKinds; ++k)
    if (auto e = get(names[k])) s.weights[k] = kv::as_number(*e, prefix + names[k]);
  try {
    s.validate();
  } catch (const ParameterError& err) {
    throw ValidationError(std::string("schedule: ") + err.what());
  }
}

AnnealSchedule load_schedule(const std::string& path) {
  const kv::Document raw = kv::parse_file(path);
  kv::Document doc;
  for (const auto& [key, entry] : raw) {
    const std::string bare = key.rfind("schedule.", 0) == 0 ? key.substr(9) : key;
    if (doc.count(bare)) throw ValidationError("duplicate key '" + bare + "'", entry.line, entry.column);
    doc.emplace(bare, entry);
  }
  reject_unknown(doc, kScheduleKeys);
  AnnealSchedule s;
  apply_schedule_keys(doc, "", s);
  return s;
}

ExperimentConfig experiment_from_document(const kv::Document& doc, const std::string& base_dir) {
  reject_unknown(doc, experiment_keys());
  ExperimentConfig cfg;
  const kv::Entry* lambda = find(doc, "lambda");
  if (!lambda) throw ValidationError("missing required key 'lambda'");
  cfg.lambda = kv::as_number(*lambda, "lambda");
  if (!(cfg.lambda > 0.0)) throw at(*lambda, "lambda must be positive");
  const kv::Entry* eps = find(doc, "epsilons");
  if (!eps) throw ValidationError("missing required key 'epsilons'");
  cfg.epsilons = kv::as_number_array(*eps, "epsilons");

  if (auto e = find(doc, "seed")) {
    const long v = kv::as_integer(*e, "seed");
    if (v < 0) throw at(*e, "seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (auto e = find(doc, "lattice")) {
    try {
      cfg.lattice = parse_lattice(kv::as_string(*e, "lattice"));
    } catch (const ParameterError& err) {
      throw at(*e, err.what());
    }
  }
  cfg.droplet_mass = drop::m_star_closed_form();
  if (auto e = find(doc, "droplet_mass")) cfg.droplet_mass = kv::as_number(*e, "droplet_mass");
  if (auto e = find(doc, "chains")) cfg.chains = static_cast<int>(kv::as_integer(*e, "chains"));
  if (auto e = find(doc, "output_dir")) cfg.output_dir = resolve(kv::as_string(*e, "output_dir"), base_dir);
  else cfg.output_dir = resolve(cfg.output_dir, base_dir);
  if (auto e = find(doc, "schedule_file")) {
    cfg.schedule_path = resolve(kv::as_string(*e, "schedule_file"), base_dir);
    cfg.schedule = load_schedule(cfg.schedule_path);
  }
  apply_schedule_keys(doc, "schedule.", cfg.schedule);

  if (auto e = find(doc, "kernel.k_cutoff")) cfg.kernel.k_cutoff = static_cast<int>(kv::as_integer(*e, "kernel.k_cutoff"));
  if (auto e = find(doc, "kernel.alpha_times_side"))
    cfg.kernel.alpha_times_side = kv::as_number(*e, "kernel.alpha_times_side");
  if (auto e = find(doc, "analysis.subdivisions"))
    cfg.analysis.subdivisions = static_cast<int>(kv::as_integer(*e, "analysis.subdivisions"));
  if (auto e = find(doc, "analysis.grid_n")) cfg.analysis.grid_n = static_cast<int>(kv::as_integer(*e, "analysis.grid_n"));
  if (auto e = find(doc, "analysis.polish_tol")) cfg.analysis.polish_tol = kv::as_number(*e, "analysis.polish_tol");
  if (auto e = find(doc, "analysis.polish_max_passes"))
    cfg.analysis.polish_max_passes = static_cast<int>(kv::as_integer(*e, "analysis.polish_max_passes"));

  try {
    cfg.validate();
  } catch (const ValidationError& err) {
    // Point at the epsilon list when that is what failed.
    if (std::string(err.what()).find("epsilon") != std::string::npos && err.line() == 0)
      throw at(*eps, err.what());
    throw;
  }
  return cfg;
}

ExperimentConfig validate_config_file(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("config file '" + path + "' does not exist");
  return experiment_from_document(kv::parse_file(path), fs::path(path).parent_path().string());
}

void ExperimentConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
  if (epsilons.empty()) throw ValidationError("epsilons must not be empty");
  const double bound = std::pow(lambda, -1.5);
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double e = epsilons[i];
    if (!(e > 0.0 && e < bound)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epsilons[%zu] = %g violates 0 < ε < λ^{-3/2} (λ^{-3/2} = %g)", i, e, bound);
      throw ValidationError(buf);
    }
    if (i > 0 && !(e < epsilons[i - 1]))
      throw ValidationError("epsilons must be strictly decreasing (entry " + std::to_string(i) + ")");
  }
  if (!(droplet_mass > 0.0)) throw ValidationError("droplet_mass must be positive");
  if (chains < 1 || chains > 64) throw ValidationError("chains must lie in [1, 64]");
  if (kernel.k_cutoff < 1 || kernel.k_cutoff > 64) throw ValidationError("kernel.k_cutoff must lie in [1, 64]");
  if (kernel.alpha_times_side && !(*kernel.alpha_times_side > 0.0))
    throw ValidationError("kernel.alpha_times_side must be positive");
  if (analysis.subdivisions < 2 || analysis.subdivisions > 16)
    throw ValidationError("analysis.subdivisions must lie in [2, 16]");
  if (analysis.grid_n < 16 || analysis.grid_n > 256 || analysis.grid_n % 2 != 0)
    throw ValidationError("analysis.grid_n must be even and lie in [16, 256]");
  if (!(analysis.polish_tol > 0.0)) throw ValidationError("analysis.polish_tol must be positive");
  if (analysis.polish_max_passes < 1) throw ValidationError("analysis.polish_max_passes must be positive");
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
  try {
    schedule.validate();
  } catch (const ParameterError& err) {
    throw ValidationError(std::string("schedule: ") + err.what());
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(root + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema"] = "okdrop/manifest";
  j["version"] = 1;
  j["code_version"] = version();
  j["lambda"] = cfg.lambda;
  j["epsilons"] = cfg.epsilons;
  j["seed"] = cfg.seed;
  auto seeds = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) seeds.push_back(derive_seed(cfg.seed, i));
  j["row_seeds"] = seeds;
  j["lattice"] = lattice_name(cfg.lattice);
  j["droplet_mass"] = cfg.droplet_mass;
  j["chains"] = cfg.chains;
  j["kernel"]["k_cutoff"] = cfg.kernel.k_cutoff;
  j["kernel"]["alpha_times_side"] =
      cfg.kernel.alpha_times_side ? nlohmann::ordered_json(*cfg.kernel.alpha_times_side) : nlohmann::ordered_json();
  const auto& s = cfg.schedule;
  j["schedule"]["initial_temp"] = s.initial_temp ? nlohmann::ordered_json(*s.initial_temp) : nlohmann::ordered_json();
  j["schedule"]["cooling_rate"] = s.cooling_rate;
  j["schedule"]["steps_per_temp"] =
      s.steps_per_temp ? nlohmann::ordered_json(*s.steps_per_temp) : nlohmann::ordered_json();
  j["schedule"]["min_temp_ratio"] = s.min_temp_ratio;
  j["schedule"]["max_levels"] = s.max_levels;
  j["schedule"]["min_mass"] = s.min_mass;
  j["schedule"]["max_mass"] = s.max_mass;
  j["schedule"]["weights"] = s.weights;
  j["analysis"]["subdivisions"] = cfg.analysis.subdivisions;
  j["analysis"]["grid_n"] = cfg.analysis.grid_n;
  j["analysis"]["polish_tol"] = cfg.analysis.polish_tol;
  j["analysis"]["polish_max_passes"] = cfg.analysis.polish_max_passes;
  return j.dump(2);
}

std::string manifest_hash(const ExperimentConfig& cfg) { return fnv1a_hex(manifest_json(cfg)); }

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("OKDROP_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) throw ValidationError("OKDROP_THREADS must be a positive integer");
    n = std::min<long>(n, cap);
  }
  return n;
}

SweepRow sweep_row(const ExperimentConfig& cfg, std::size_t index, DropletConfig* final_config) {
  const double eps = cfg.epsilons.at(index);
  const TorusSpec spec(eps, cfg.lambda);
  const EwaldKernel kernel = cfg.kernel.make(spec.side_length());
  const DropletConfig start = init_lattice(spec, cfg.lattice, cfg.droplet_mass);

  std::optional<MinimizeResult> best;
  for (int c = 0; c < cfg.chains; ++c) {
    AnnealSchedule schedule = cfg.schedule;
    schedule.seed = derive_seed(derive_seed(cfg.seed, index), static_cast<std::uint64_t>(c));
    MinimizeResult annealed = anneal(start, kernel, schedule);
    MinimizeResult polished =
        polish(annealed.config, kernel, cfg.analysis.polish_tol, cfg.analysis.polish_max_passes);
    if (!polished.converged)
      throw ConvergenceError("polish did not reach tol " + format_number(cfg.analysis.polish_tol) + " in " +
                             std::to_string(cfg.analysis.polish_max_passes) + " passes");
    if (!best || polished.breakdown.total < best->breakdown.total) best = std::move(polished);
  }
  const DropletConfig& config = best->config;
  validate(config);
  const EnergyBreakdown energy = total_energy(config, kernel);
  const PotentialField field = potential_field(config, kernel, cfg.analysis.grid_n);
  const CoarseGrainReport cg = energy_measure(config, kernel, cfg.analysis.subdivisions);

  SweepRow row;
  row.epsilon = eps;
  row.lambda = cfg.lambda;
  row.n_droplets = static_cast<int>(config.droplets.size());
  row.scaled_total = energy.scaled_total;
  row.sup_v = field.sup_norm;
  row.min_v = field.minimum;
  double rmax = 0.0;
  for (const auto& d : config.droplets) {
    rmax = std::max(rmax, d.radius());
    row.masses.push_back(d.mass);
  }
  row.max_diameter = 2.0 * rmax;
  row.mu_octant_deviation = cg.max_mu_deviation;
  row.nu_octant_deviation = cg.max_nu_deviation(cfg.lambda * drop::f_star_closed_form());
  if (final_config) *final_config = config;
  return row;
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SweepRecord run_sweep(const ExperimentConfig& cfg, int threads,
                      const std::function<void(const std::string&)>& log) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const std::string hash = manifest_hash(cfg);
  const std::size_t n = cfg.epsilons.size();
  std::vector<SweepRow> rows(n);
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      SweepRow row;
      try {
        DropletConfig final_config{TorusSpec(cfg.epsilons[i], cfg.lambda), {}};
        row = sweep_row(cfg, i, &final_config);
        write_config((fs::path(cfg.output_dir) / ("config_" + std::to_string(i) + ".json")).string(),
                     final_config, hash);
      } catch (const std::exception& e) {
        row = SweepRow{};
        row.epsilon = cfg.epsilons[i];
        row.lambda = cfg.lambda;
        row.status = std::string("error: ") + e.what();
      }
      rows[i] = std::move(row);
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        log("eps=" + format_number(rows[i].epsilon) + " N=" + std::to_string(rows[i].n_droplets) + " " +
            rows[i].status);
      }
    }
  };
  const int workers = std::min<int>(worker_count(threads), static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepRecord record{hash, std::move(rows)};
  std::stable_sort(record.rows.begin(), record.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.epsilon > b.epsilon; });
  write_text((fs::path(cfg.output_dir) / "sweep.csv").string(), sweep_csv(record));
  auto manifest = nlohmann::ordered_json::parse(manifest_json(cfg));
  manifest["hash"] = hash;
  write_text((fs::path(cfg.output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return record;
}

SweepRecord read_sweep(const std::string& path) {
  const fs::path p(path);
  return parse_sweep_csv(read_text(fs::is_directory(p) ? (p / "sweep.csv").string() : path));
}

}  // namespace okdrop
