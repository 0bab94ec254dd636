#include "gsynth/records.hpp"

#include <fstream>
#include <stdexcept>

namespace gsynth {

namespace {

nlohmann::ordered_json vec3_json(const Vec3& v) {
  return nlohmann::ordered_json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw std::invalid_argument(std::string("record: bad field ") + key);
  return Vec3(j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>());
}

}  // namespace

nlohmann::ordered_json record_to_json(const GraspRecord& r) {
  nlohmann::ordered_json j;
  j["type"] = "grasp";
  j["object_id"] = r.object_id;
  j["hand_id"] = r.hand_id;
  j["seed"] = r.seed;
  j["translation"] = vec3_json(r.translation);
  j["rotation_wxyz"] = nlohmann::ordered_json::array(
      {r.rotation.w(), r.rotation.x(), r.rotation.y(), r.rotation.z()});
  j["joints"] = nlohmann::ordered_json::array();
  for (int i = 0; i < r.joints.size(); ++i) j["joints"].push_back(r.joints[i]);
  j["contacts"] = nlohmann::ordered_json::array();
  for (const ContactRecord& c : r.contacts) {
    nlohmann::ordered_json cj;
    cj["cloud_index"] = c.cloud_index;
    cj["position"] = vec3_json(c.position);
    cj["inward_normal"] = vec3_json(c.inward_normal);
    j["contacts"].push_back(cj);
  }
  j["energy_total"] = r.energy.total;
  j["energy_grasp"] = r.energy.e_grasp;
  j["energy_physics"] = r.energy.e_phy;
  j["penetration"] = r.energy.penetration;
  j["joint_penalty"] = r.energy.joint_penalty;
  j["max_penetration"] = r.energy.max_penetration;
  j["fc_value"] = r.energy.fc.value;
  j["fc_eig_term"] = r.energy.fc.eig_term;
  j["fc_gc_norm"] = r.energy.fc.gc_norm;
  j["fc_sdf_term"] = r.energy.fc.sdf_term;
  j["fc_lambda_min"] = r.energy.fc.lambda_min;
  j["oracle_pass"] = r.oracle_pass;
  j["success"] = r.success;
  j["config_hash"] = r.config_hash;
  return j;
}

GraspRecord record_from_json(const nlohmann::json& j) {
  GraspRecord r;
  r.object_id = j.value("object_id", std::string());
  r.hand_id = j.value("hand_id", std::string());
  r.seed = j.value("seed", std::uint64_t(0));
  r.translation = vec3_from(j, "translation");
  const auto& q = j.at("rotation_wxyz");
  if (!q.is_array() || q.size() != 4)
    throw std::invalid_argument("record: bad field rotation_wxyz");
  r.rotation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                    q[3].get<double>());
  const auto& joints = j.at("joints");
  r.joints.resize(joints.size());
  for (std::size_t i = 0; i < joints.size(); ++i) r.joints[i] = joints[i].get<double>();
  for (const auto& cj : j.at("contacts")) {
    ContactRecord c;
    c.cloud_index = cj.at("cloud_index").get<int>();
    c.position = vec3_from(cj, "position");
    c.inward_normal = vec3_from(cj, "inward_normal");
    r.contacts.push_back(c);
  }
  r.energy.total = j.at("energy_total").get<double>();
  r.energy.e_grasp = j.at("energy_grasp").get<double>();
  r.energy.e_phy = j.at("energy_physics").get<double>();
  r.energy.penetration = j.value("penetration", 0.0);
  r.energy.joint_penalty = j.value("joint_penalty", 0.0);
  r.energy.max_penetration = j.value("max_penetration", 0.0);
  r.energy.fc.value = j.value("fc_value", 0.0);
  r.energy.fc.eig_term = j.value("fc_eig_term", 0.0);
  r.energy.fc.gc_norm = j.value("fc_gc_norm", 0.0);
  r.energy.fc.sdf_term = j.value("fc_sdf_term", 0.0);
  r.energy.fc.lambda_min = j.value("fc_lambda_min", 0.0);
  r.oracle_pass = j.value("oracle_pass", false);
  r.success = j.value("success", false);
  r.config_hash = j.value("config_hash", std::string());
  return r;
}

void write_records(const std::string& path, const nlohmann::ordered_json& config_echo,
                   const std::string& config_hash,
                   const std::vector<GraspRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  nlohmann::ordered_json meta;
  meta["type"] = "meta";
  meta["config"] = config_echo;
  meta["config_hash"] = config_hash;
  out << meta.dump() << "\n";
  for (const GraspRecord& r : records) out << record_to_json(r).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

RecordFile read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open grasp file: " + path);
  RecordFile out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw std::invalid_argument("grasp file: line " + std::to_string(lineno) +
                                  " is not valid JSON");
    }
    const std::string type = j.value("type", std::string("grasp"));
    if (type == "meta") {
      out.config_echo = j.value("config", nlohmann::json());
      out.config_hash = j.value("config_hash", std::string());
    } else if (type == "grasp") {
      try {
        out.records.push_back(record_from_json(j));
      } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("grasp file: line " + std::to_string(lineno) +
                                    " has missing or malformed fields");
      }
    } else {
      throw std::invalid_argument("grasp file: line " + std::to_string(lineno) +
                                  " has unknown type '" + type + "'");
    }
  }
  if (out.records.empty())
    throw std::invalid_argument("grasp file contains no grasp records: " + path);
  return out;
}

}  // namespace gsynth
