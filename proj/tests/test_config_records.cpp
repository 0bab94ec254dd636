#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gsynth/config.hpp"
#include "gsynth/records.hpp"

using namespace gsynth;

TEST_CASE("fnv1a hash reference vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("defaults are registered and typed") {
  RunConfig cfg;
  CHECK(cfg.num("fc.mu") == 0.5);
  CHECK(cfg.num("fc.epsilon") == 0.01);
  CHECK(cfg.num("fc.delta") == 0.5);
  CHECK(cfg.integer("sampler.steps") == 3000);
  CHECK(cfg.integer("sampler.chains") == 64);
  CHECK(cfg.str("hand.spec") == "ftac15");
  CHECK(cfg.str("object.shape") == "sphere");
  CHECK(cfg.num("object.radius") == 0.04);
  CHECK(cfg.integer("oracle.cone_facets") == 8);
  CHECK(cfg.integer("oracle.directions") == 10000);
  CHECK(cfg.num("oracle.margin") == 0.05);
  CHECK(cfg.num("energy.lambda_phy") == 100.0);
  CHECK(cfg.num("contact_map.eps1") == 1e-4);
  CHECK(cfg.integer("contact_map.dims") == 6);
}

TEST_CASE("unknown keys are rejected by name") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.set_pair("fc.muu=0.4"), doctest::Contains("fc.muu"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg.load_json(nlohmann::json{{"sampler.stepz", 10}}),
                       doctest::Contains("sampler.stepz"), std::invalid_argument);
}

TEST_CASE("type mismatches are rejected by name") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.set_pair("fc.mu=banana"), doctest::Contains("fc.mu"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg.load_json(nlohmann::json{{"sampler.steps", "many"}}),
                       doctest::Contains("sampler.steps"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg.set_pair("nothing here"), doctest::Contains("key=value"),
                       std::invalid_argument);
}

TEST_CASE("set accepts every registered type") {
  RunConfig cfg;
  cfg.set_pair("fc.mu=0.8");
  CHECK(cfg.num("fc.mu") == 0.8);
  cfg.set_pair("sampler.chains=7");
  CHECK(cfg.integer("sampler.chains") == 7);
  cfg.set_pair("hand.spec=gripper1");
  CHECK(cfg.str("hand.spec") == "gripper1");
  cfg.set_pair("fc.eig_term_mode=literal");
  CHECK(cfg.str("fc.eig_term_mode") == "literal");
  CHECK(cfg.fc_params().literal_eig);
  cfg.set_pair("rng.seed=123");
  cfg.validate();
}

TEST_CASE("validation names the out-of-range key") {
  RunConfig cfg;
  cfg.set_pair("fc.epsilon=-0.5");
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("fc.epsilon"),
                       std::invalid_argument);
  RunConfig cfg2;
  cfg2.set_pair("sampler.n_contacts=9");
  CHECK_THROWS_WITH_AS(cfg2.validate(), doctest::Contains("sampler.n_contacts"),
                       std::invalid_argument);
  RunConfig cfg3;
  cfg3.set_pair("object.shape=torus");
  CHECK_THROWS_WITH_AS(cfg3.validate(), doctest::Contains("object.shape"),
                       std::invalid_argument);
  RunConfig cfg4;
  cfg4.set_pair("oracle.cone_facets=3");
  CHECK_THROWS_WITH_AS(cfg4.validate(), doctest::Contains("oracle.cone_facets"),
                       std::invalid_argument);
}

TEST_CASE("echo is sorted and the hash tracks content") {
  RunConfig cfg;
  const auto echo = cfg.echo();
  std::string prev;
  for (auto it = echo.begin(); it != echo.end(); ++it) {
    CHECK(prev < it.key());
    prev = it.key();
  }
  const std::string h0 = cfg.hash();
  CHECK(h0.size() == 16);
  CHECK(cfg.hash() == h0);  // stable
  cfg.set_pair("fc.mu=0.51");
  CHECK(cfg.hash() != h0);
  RunConfig cfg2;
  cfg2.set_pair("fc.mu=0.51");
  CHECK(cfg2.hash() == cfg.hash());  // content addressed, not history addressed
}

TEST_CASE("config loads from file and builds the scene") {
  const std::string path = "/tmp/gsynth_test_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"object.shape": "box", "object.half_x": 0.02, "object.half_y": 0.03,
               "object.half_z": 0.04, "object.pos_z": 0.1, "fc.epsilon": 0.001})";
  }
  RunConfig cfg;
  cfg.load_file(path);
  cfg.validate();
  const ObjectModel obj = cfg.make_object();
  CHECK(obj.kind == ShapeKind::Box);
  CHECK((obj.half_extents - Vec3(0.02, 0.03, 0.04)).norm() == 0.0);
  CHECK(obj.pose.translation().z() == 0.1);
  CHECK(obj.id == "box_0.02x0.03x0.04");
  CHECK(cfg.fc_params().epsilon == 0.001);
  // The oracle reuses the contact model's friction coefficient.
  cfg.set_pair("fc.mu=0.77");
  CHECK(cfg.oracle_params().mu == 0.77);
  std::remove(path.c_str());

  RunConfig sphere_cfg;
  CHECK(sphere_cfg.make_object().id == "sphere_r0.04");
  CHECK(sphere_cfg.make_hand().name == "ftac15");
}

TEST_CASE("grasp records round-trip through json") {
  GraspRecord r;
  r.object_id = "sphere_r0.04";
  r.hand_id = "ftac15";
  r.seed = 42;
  r.translation = Vec3(0.125, -0.25, 0.5);
  r.rotation = Quat(Eigen::AngleAxisd(1.1, Vec3(1, 2, 3).normalized()));
  r.joints = VecX::LinSpaced(15, 0.0, 1.4);
  r.contacts.resize(2);
  r.contacts[0] = {17, Vec3(0.01, 0.02, 0.03), Vec3(0, 0, -1)};
  r.contacts[1] = {99, Vec3(-0.01, 0.0, 0.04), Vec3(1, 0, 0)};
  r.energy.total = 3.25;
  r.energy.e_grasp = 0.25;
  r.energy.e_phy = 0.03;
  r.energy.penetration = 0.01;
  r.energy.joint_penalty = 0.02;
  r.energy.max_penetration = 0.004;
  r.energy.fc.value = 0.25;
  r.energy.fc.eig_term = 0.1;
  r.energy.fc.gc_norm = 0.15;
  r.energy.fc.sdf_term = 0.0;
  r.energy.fc.lambda_min = 0.002;
  r.oracle_pass = true;
  r.success = false;
  r.config_hash = "0123456789abcdef";

  const auto j = record_to_json(r);
  CHECK(j.at("type") == "grasp");
  // Quaternion goes out w first.
  CHECK(j.at("rotation_wxyz").size() == 4);
  CHECK(j.at("rotation_wxyz")[0].get<double>() == doctest::Approx(r.rotation.w()));

  const GraspRecord b = record_from_json(j);
  CHECK(b.object_id == r.object_id);
  CHECK(b.hand_id == r.hand_id);
  CHECK(b.seed == r.seed);
  CHECK((b.translation - r.translation).norm() == 0.0);
  CHECK(b.rotation.coeffs() == r.rotation.coeffs());
  CHECK((b.joints - r.joints).norm() == 0.0);
  REQUIRE(b.contacts.size() == 2);
  CHECK(b.contacts[1].cloud_index == 99);
  CHECK((b.contacts[1].position - r.contacts[1].position).norm() == 0.0);
  CHECK(b.energy.total == r.energy.total);
  CHECK(b.energy.fc.lambda_min == r.energy.fc.lambda_min);
  CHECK(b.oracle_pass == r.oracle_pass);
  CHECK(b.success == r.success);
  CHECK(b.config_hash == r.config_hash);
}

TEST_CASE("record files carry a meta line and reject damage") {
  const std::string path = "/tmp/gsynth_test_records.jsonl";
  GraspRecord r;
  r.seed = 7;
  r.joints = VecX::Zero(3);
  RunConfig cfg;
  write_records(path, cfg.echo(), cfg.hash(), {r});

  SUBCASE("read back") {
    const RecordFile f = read_records(path);
    CHECK(f.config_hash == cfg.hash());
    CHECK(f.config_echo.at("fc.mu").get<double>() == 0.5);
    REQUIRE(f.records.size() == 1);
    CHECK(f.records[0].seed == 7);
  }
  SUBCASE("first line is the meta record") {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("type") == "meta");
    CHECK(j.contains("config"));
    CHECK(j.contains("config_hash"));
  }
  SUBCASE("empty file") {
    std::ofstream(path).close();
    CHECK_THROWS_AS(read_records(path), std::invalid_argument);
  }
  SUBCASE("meta only, no grasps") {
    std::ofstream out(path);
    out << R"({"type":"meta","config":{},"config_hash":"x"})" << "\n";
    out.close();
    CHECK_THROWS_AS(read_records(path), std::invalid_argument);
  }
  SUBCASE("malformed line is reported with its number") {
    std::ofstream out(path, std::ios::app);
    out << "{not json\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_records(path), doctest::Contains("line 3"),
                         std::invalid_argument);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_records("/tmp/gsynth_no_such_file.jsonl"),
                    std::invalid_argument);
  }
  std::remove(path.c_str());
}
