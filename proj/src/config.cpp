#include "gsynth/config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gsynth {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RunConfig::RunConfig() {
  auto d = [&](const char* k, double v) { values_[k] = v; };
  auto i = [&](const char* k, long long v) { values_[k] = v; };
  auto s = [&](const char* k, const char* v) { values_[k] = std::string(v); };

  i("rng.seed", 0);
  s("hand.spec", "ftac15");

  s("object.shape", "sphere");
  d("object.radius", 0.04);
  d("object.half_x", 0.03);
  d("object.half_y", 0.03);
  d("object.half_z", 0.03);
  d("object.half_height", 0.05);
  s("object.mesh_path", "");
  d("object.pos_x", 0.0);
  d("object.pos_y", 0.0);
  d("object.pos_z", 0.0);
  d("object.rot_w", 1.0);
  d("object.rot_x", 0.0);
  d("object.rot_y", 0.0);
  d("object.rot_z", 0.0);

  d("fc.mu", 0.5);
  d("fc.epsilon", 0.01);
  d("fc.delta", 0.5);
  d("fc.w", 1.0);
  s("fc.eig_term_mode", "rectified");
  d("fc.surface_tol", 1e-3);

  d("energy.lambda_grasp", 1.0);
  d("energy.lambda_phy", 100.0);

  i("sampler.steps", 3000);
  i("sampler.chains", 64);
  i("sampler.n_contacts", 4);
  d("sampler.sigma_rot", 0.02);
  d("sampler.sigma_trans", 0.005);
  d("sampler.sigma_joint", 0.02);
  d("sampler.p_contact", 0.15);
  d("sampler.t_init", 1.0);
  d("sampler.t_final", 0.01);
  d("sampler.success_max_penetration", 0.005);

  i("oracle.cone_facets", 8);
  i("oracle.directions", 10000);
  d("oracle.margin", 0.05);

  d("contact_map.eps1", 1e-4);
  d("contact_map.eps2", 0.05);
  i("contact_map.dims", 6);

  d("landscape.merge_tol", 0.05);
  d("landscape.barrier_merge_eps", 1e-3);
  i("landscape.attempts", 3);
  d("landscape.magnet", 5.0);
  d("landscape.ad_sigma", 0.05);
  d("landscape.ad_temperature", 0.05);
  i("landscape.ad_max_steps", 2000);
  d("landscape.descend_step", 0.01);
  i("landscape.descend_max_steps", 1000);
  d("landscape.grad_tol", 1e-4);

  d("planner.sigma_pos", 0.005);
  d("planner.sigma_rot", 0.1);
  i("planner.trials", 10);
}

const RunConfig::Value& RunConfig::lookup(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  return it->second;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error&) {
    throw std::invalid_argument("config file is not valid JSON: " + path);
  }
  load_json(j);
}

void RunConfig::load_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::invalid_argument("unknown config key: " + key);
    Value& slot = it->second;
    if (std::holds_alternative<double>(slot)) {
      if (!value.is_number())
        throw std::invalid_argument("config key " + key + ": expected a number");
      slot = value.get<double>();
    } else if (std::holds_alternative<long long>(slot)) {
      if (!value.is_number_integer())
        throw std::invalid_argument("config key " + key + ": expected an integer");
      slot = value.get<long long>();
    } else if (std::holds_alternative<bool>(slot)) {
      if (!value.is_boolean())
        throw std::invalid_argument("config key " + key + ": expected a boolean");
      slot = value.get<bool>();
    } else {
      if (!value.is_string())
        throw std::invalid_argument("config key " + key + ": expected a string");
      slot = value.get<std::string>();
    }
  }
}

void RunConfig::set_pair(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("--set expects key=value, got: " + assignment);
  set_from_string(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::set_from_string(const std::string& key, const std::string& text) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  Value& slot = it->second;
  try {
    if (std::holds_alternative<double>(slot)) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      slot = v;
    } else if (std::holds_alternative<long long>(slot)) {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      slot = v;
    } else if (std::holds_alternative<bool>(slot)) {
      if (text == "true" || text == "1") slot = true;
      else if (text == "false" || text == "0") slot = false;
      else throw std::invalid_argument("not a boolean");
    } else {
      slot = text;
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": cannot parse value '" +
                                text + "'");
  }
}

void RunConfig::validate() const {
  auto require = [&](bool ok, const char* key, const char* what) {
    if (!ok)
      throw std::invalid_argument(std::string("config key ") + key + ": " + what);
  };
  require(num("fc.mu") > 0.0, "fc.mu", "must be > 0");
  require(num("fc.epsilon") > 0.0, "fc.epsilon", "must be > 0");
  require(num("fc.delta") > 0.0, "fc.delta", "must be > 0");
  require(num("fc.w") >= 0.0, "fc.w", "must be >= 0");
  require(num("fc.surface_tol") > 0.0, "fc.surface_tol", "must be > 0");
  const std::string& mode = str("fc.eig_term_mode");
  require(mode == "rectified" || mode == "literal", "fc.eig_term_mode",
          "must be 'rectified' or 'literal'");
  require(num("energy.lambda_grasp") >= 0.0, "energy.lambda_grasp", "must be >= 0");
  require(num("energy.lambda_phy") >= 0.0, "energy.lambda_phy", "must be >= 0");
  require(integer("sampler.steps") >= 1, "sampler.steps", "must be >= 1");
  require(integer("sampler.chains") >= 1, "sampler.chains", "must be >= 1");
  const long long nc = integer("sampler.n_contacts");
  require(nc >= 2 && nc <= 8, "sampler.n_contacts", "must be in [2, 8]");
  require(num("sampler.sigma_rot") > 0.0, "sampler.sigma_rot", "must be > 0");
  require(num("sampler.sigma_trans") > 0.0, "sampler.sigma_trans", "must be > 0");
  require(num("sampler.sigma_joint") > 0.0, "sampler.sigma_joint", "must be > 0");
  const double pc = num("sampler.p_contact");
  require(pc >= 0.0 && pc < 1.0, "sampler.p_contact", "must be in [0, 1)");
  require(num("sampler.t_final") > 0.0, "sampler.t_final", "must be > 0");
  require(num("sampler.t_init") >= num("sampler.t_final"), "sampler.t_init",
          "must be >= sampler.t_final");
  require(integer("oracle.cone_facets") >= 4, "oracle.cone_facets", "must be >= 4");
  require(integer("oracle.directions") >= 1000, "oracle.directions",
          "must be >= 1000");
  require(num("oracle.margin") >= 0.0, "oracle.margin", "must be >= 0");
  require(num("contact_map.eps1") > 0.0, "contact_map.eps1", "must be > 0");
  require(num("contact_map.eps2") > 0.0, "contact_map.eps2", "must be > 0");
  require(integer("contact_map.dims") >= 1, "contact_map.dims", "must be >= 1");
  require(num("landscape.merge_tol") > 0.0, "landscape.merge_tol", "must be > 0");
  require(integer("landscape.attempts") >= 1, "landscape.attempts", "must be >= 1");
  require(num("landscape.magnet") > 0.0, "landscape.magnet", "must be > 0");
  require(num("landscape.ad_sigma") > 0.0, "landscape.ad_sigma", "must be > 0");
  require(num("landscape.ad_temperature") > 0.0, "landscape.ad_temperature",
          "must be > 0");
  require(integer("landscape.ad_max_steps") >= 1, "landscape.ad_max_steps",
          "must be >= 1");
  require(num("landscape.descend_step") > 0.0, "landscape.descend_step",
          "must be > 0");
  require(integer("landscape.descend_max_steps") >= 1,
          "landscape.descend_max_steps", "must be >= 1");
  require(num("landscape.grad_tol") > 0.0, "landscape.grad_tol", "must be > 0");
  require(num("planner.sigma_pos") >= 0.0, "planner.sigma_pos", "must be >= 0");
  require(num("planner.sigma_rot") >= 0.0, "planner.sigma_rot", "must be >= 0");
  require(integer("planner.trials") >= 1, "planner.trials", "must be >= 1");

  const std::string& shape = str("object.shape");
  require(shape == "sphere" || shape == "box" || shape == "cylinder" ||
              shape == "mesh",
          "object.shape", "must be sphere, box, cylinder, or mesh");
  if (shape == "sphere" || shape == "cylinder")
    require(num("object.radius") > 0.0, "object.radius", "must be > 0");
  if (shape == "cylinder")
    require(num("object.half_height") > 0.0, "object.half_height", "must be > 0");
  if (shape == "box")
    require(num("object.half_x") > 0.0 && num("object.half_y") > 0.0 &&
                num("object.half_z") > 0.0,
            "object.half_x", "half extents must be > 0");
  if (shape == "mesh")
    require(!str("object.mesh_path").empty(), "object.mesh_path",
            "required for mesh objects");
}

double RunConfig::num(const std::string& key) const {
  const Value& v = lookup(key);
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<long long>(v)) return double(std::get<long long>(v));
  throw std::invalid_argument("config key " + key + ": not numeric");
}

long long RunConfig::integer(const std::string& key) const {
  const Value& v = lookup(key);
  if (std::holds_alternative<long long>(v)) return std::get<long long>(v);
  throw std::invalid_argument("config key " + key + ": not an integer");
}

bool RunConfig::boolean(const std::string& key) const {
  const Value& v = lookup(key);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  throw std::invalid_argument("config key " + key + ": not a boolean");
}

const std::string& RunConfig::str(const std::string& key) const {
  const Value& v = lookup(key);
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  throw std::invalid_argument("config key " + key + ": not a string");
}

nlohmann::ordered_json RunConfig::echo() const {
  nlohmann::ordered_json j;
  for (const auto& [key, value] : values_) {
    if (std::holds_alternative<double>(value)) j[key] = std::get<double>(value);
    else if (std::holds_alternative<long long>(value))
      j[key] = std::get<long long>(value);
    else if (std::holds_alternative<bool>(value)) j[key] = std::get<bool>(value);
    else j[key] = std::get<std::string>(value);
  }
  return j;
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)fnv1a64(echo().dump()));
  return buf;
}

FCParams RunConfig::fc_params() const {
  FCParams p;
  p.mu = num("fc.mu");
  p.epsilon = num("fc.epsilon");
  p.delta = num("fc.delta");
  p.w = num("fc.w");
  p.literal_eig = str("fc.eig_term_mode") == "literal";
  p.surface_tol = num("fc.surface_tol");
  return p;
}

EnergyParams RunConfig::energy_params() const {
  EnergyParams p;
  p.fc = fc_params();
  p.lambda_grasp = num("energy.lambda_grasp");
  p.lambda_phy = num("energy.lambda_phy");
  return p;
}

OracleParams RunConfig::oracle_params() const {
  OracleParams p;
  p.mu = num("fc.mu");
  p.cone_facets = int(integer("oracle.cone_facets"));
  p.directions = int(integer("oracle.directions"));
  p.margin = num("oracle.margin");
  return p;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig c;
  c.steps = int(integer("sampler.steps"));
  c.n_contacts = int(integer("sampler.n_contacts"));
  c.sigma_rot = num("sampler.sigma_rot");
  c.sigma_trans = num("sampler.sigma_trans");
  c.sigma_joint = num("sampler.sigma_joint");
  c.p_contact = num("sampler.p_contact");
  c.t_init = num("sampler.t_init");
  c.t_final = num("sampler.t_final");
  c.success_max_penetration = num("sampler.success_max_penetration");
  c.oracle = oracle_params();
  return c;
}

ContactMapParams RunConfig::contact_map_params() const {
  ContactMapParams p;
  p.eps1 = num("contact_map.eps1");
  p.eps2 = num("contact_map.eps2");
  p.dims = int(integer("contact_map.dims"));
  return p;
}

GraphOptions RunConfig::graph_options() const {
  GraphOptions o;
  o.merge_tol = num("landscape.merge_tol");
  o.barrier_merge_eps = num("landscape.barrier_merge_eps");
  o.ad_attempts = int(integer("landscape.attempts"));
  o.ad.magnet = num("landscape.magnet");
  o.ad.sigma = num("landscape.ad_sigma");
  o.ad.temperature = num("landscape.ad_temperature");
  o.ad.max_steps = int(integer("landscape.ad_max_steps"));
  o.ad.reach_tol = o.merge_tol;
  o.descend.step0 = num("landscape.descend_step");
  o.descend.max_steps = int(integer("landscape.descend_max_steps"));
  o.descend.grad_tol = num("landscape.grad_tol");
  return o;
}

PlannerParams RunConfig::planner_params() const {
  PlannerParams p;
  p.sigma_pos = num("planner.sigma_pos");
  p.sigma_rot = num("planner.sigma_rot");
  p.trials = int(integer("planner.trials"));
  return p;
}

HandModel RunConfig::make_hand() const {
  const std::string& spec = str("hand.spec");
  if (spec == "ftac15" || spec == "gripper1") return builtin_hand(spec);
  return load_hand_spec_file(spec);
}

ObjectModel RunConfig::make_object() const {
  Quat q(num("object.rot_w"), num("object.rot_x"), num("object.rot_y"),
         num("object.rot_z"));
  if (q.norm() < 1e-12)
    throw std::invalid_argument("config key object.rot_w: zero quaternion");
  q.normalize();
  const Pose pose = make_pose(
      q.toRotationMatrix(),
      Vec3(num("object.pos_x"), num("object.pos_y"), num("object.pos_z")));

  const std::string& shape = str("object.shape");
  char idbuf[96];
  ObjectModel o;
  if (shape == "sphere") {
    o = make_sphere(num("object.radius"), pose);
    std::snprintf(idbuf, sizeof idbuf, "sphere_r%g", num("object.radius"));
  } else if (shape == "box") {
    o = make_box(Vec3(num("object.half_x"), num("object.half_y"),
                      num("object.half_z")),
                 pose);
    std::snprintf(idbuf, sizeof idbuf, "box_%gx%gx%g", num("object.half_x"),
                  num("object.half_y"), num("object.half_z"));
  } else if (shape == "cylinder") {
    o = make_cylinder(num("object.radius"), num("object.half_height"), pose);
    std::snprintf(idbuf, sizeof idbuf, "cylinder_r%g_h%g", num("object.radius"),
                  num("object.half_height"));
  } else {
    const std::string& path = str("object.mesh_path");
    auto mesh = std::make_shared<TriMesh>(
        path.size() > 4 && path.substr(path.size() - 4) == ".stl"
            ? load_stl(path)
            : load_obj(path));
    o = make_mesh_object(mesh, pose);
    const std::size_t slash = path.find_last_of('/');
    std::snprintf(idbuf, sizeof idbuf, "mesh_%s",
                  (slash == std::string::npos ? path : path.substr(slash + 1)).c_str());
  }
  o.id = idbuf;
  return o;
}

}  // namespace gsynth
