#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <json.hpp>

#include "gsynth/contact_map.hpp"
#include "gsynth/energy.hpp"
#include "gsynth/landscape.hpp"
#include "gsynth/planner.hpp"
#include "gsynth/sampler.hpp"

namespace gsynth {

std::uint64_t fnv1a64(const std::string& bytes);

// Flat, typed key-value configuration. Every key exists with its default
// from construction; loading a file or applying --set can only overwrite
// known keys with values of the registered type, anything else throws
// std::invalid_argument naming the key. The echoed form (sorted keys) is
// embedded in every output artifact together with its FNV-1a hash.
class RunConfig {
 public:
  using Value = std::variant<double, long long, bool, std::string>;

  RunConfig();

  void load_file(const std::string& path);
  void load_json(const nlohmann::json& j);
  /// Applies one "key=value" assignment (the --set grammar).
  void set_pair(const std::string& assignment);
  void set_from_string(const std::string& key, const std::string& text);

  /// Range and enumeration checks across keys; throws naming the key.
  void validate() const;

  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& str(const std::string& key) const;

  nlohmann::ordered_json echo() const;
  std::string hash() const;

  FCParams fc_params() const;
  EnergyParams energy_params() const;
  OracleParams oracle_params() const;
  SamplerConfig sampler_config() const;
  ContactMapParams contact_map_params() const;
  GraphOptions graph_options() const;
  PlannerParams planner_params() const;
  HandModel make_hand() const;
  ObjectModel make_object() const;

 private:
  const Value& lookup(const std::string& key) const;
  std::map<std::string, Value> values_;
};

}  // namespace gsynth
