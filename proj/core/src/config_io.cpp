#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "okdrop/errors.hpp"
#include "okdrop/torus_energy.hpp"

namespace okdrop {
namespace {

constexpr const char* kSchemaName = "okdrop/droplet-config";
constexpr int kSchemaVersion = 1;

using nlohmann::json;

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ValidationError(std::string("droplet config: missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

std::string to_json(const DropletConfig& config, const std::string& manifest_hash) {
  json j;
  j["schema"] = kSchemaName;
  j["version"] = kSchemaVersion;
  j["epsilon"] = config.spec.epsilon();
  j["lambda"] = config.spec.lambda();
  j["side_length"] = config.spec.side_length();
  j["mass_budget"] = config.spec.mass_budget();
  if (!manifest_hash.empty()) j["manifest"] = manifest_hash;
  json drops = json::array();
  for (const auto& d : config.droplets)
    drops.push_back({{"center", {d.center.x, d.center.y, d.center.z}}, {"mass", d.mass}});
  j["droplets"] = std::move(drops);
  return j.dump(2) + "\n";
}

DropletConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("droplet config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("droplet config must be a JSON object");
  if (j.contains("version") && (!j["version"].is_number_integer() || j["version"].get<int>() != kSchemaVersion))
    throw ValidationError("droplet config: unsupported version (expected " +
                          std::to_string(kSchemaVersion) + ")");
  if (j.contains("schema") && j["schema"] != kSchemaName)
    throw ValidationError("droplet config: unexpected schema name");
  const TorusSpec spec(number_field(j, "epsilon"), number_field(j, "lambda"));
  if (!j.contains("droplets") || !j["droplets"].is_array())
    throw ValidationError("droplet config: missing 'droplets' array");
  DropletConfig config{spec, {}};
  for (const auto& d : j["droplets"]) {
    if (!d.is_object() || !d.contains("center") || !d["center"].is_array() || d["center"].size() != 3)
      throw ValidationError("droplet config: each droplet needs a 3-component 'center'");
    Droplet drop;
    for (int a = 0; a < 3; ++a) {
      if (!d["center"][a].is_number()) throw ValidationError("droplet config: non-numeric center");
      drop.center[a] = d["center"][a].get<double>();
    }
    drop.mass = number_field(d, "mass");
    config.droplets.push_back(drop);
  }
  validate(config);
  return config;
}

void write_config(const std::string& path, const DropletConfig& config,
                  const std::string& manifest_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << to_json(config, manifest_hash);
}

DropletConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open droplet config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace okdrop
