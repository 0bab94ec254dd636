#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsynth/energy.hpp"
#include "gsynth/types.hpp"

namespace gsynth {

// One synthesized grasp. Contact positions and inward normals are stored in
// the object frame so a record is invariant under rigid motions of the scene
// and can be re-scored without the object pose.
struct ContactRecord {
  int cloud_index = 0;
  Vec3 position = Vec3::Zero();
  Vec3 inward_normal = Vec3::Zero();
};

struct GraspRecord {
  std::string object_id;
  std::string hand_id;
  std::uint64_t seed = 0;
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();  // serialized w-first
  VecX joints;
  std::vector<ContactRecord> contacts;
  EnergyBreakdown energy;
  bool oracle_pass = false;
  bool success = false;
  std::string config_hash;
};

nlohmann::ordered_json record_to_json(const GraspRecord& r);
GraspRecord record_from_json(const nlohmann::json& j);

// JSONL layout: first line is a meta record carrying the full config echo and
// its hash, each following line is one grasp record.
void write_records(const std::string& path, const nlohmann::ordered_json& config_echo,
                   const std::string& config_hash, const std::vector<GraspRecord>& records);

struct RecordFile {
  nlohmann::json config_echo;  // null when the file has no meta line
  std::string config_hash;
  std::vector<GraspRecord> records;
};

// Throws std::invalid_argument on unreadable files, malformed lines, or a
// file with no grasp records.
RecordFile read_records(const std::string& path);

}  // namespace gsynth
