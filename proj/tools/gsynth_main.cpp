#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsynth/config.hpp"
#include "gsynth/contact_map.hpp"
#include "gsynth/landscape.hpp"
#include "gsynth/planner.hpp"
#include "gsynth/records.hpp"
#include "gsynth/sampler.hpp"

namespace {

using namespace gsynth;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  bool seed_given = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "flat JSON config file");
  sub->add_option("--set", c.sets, "override one config key (key=value), repeatable");
  sub->add_option("--seed", c.seed, "shorthand for --set rng.seed=N")
      ->each([&c](const std::string&) { c.seed_given = true; });
}

RunConfig build_config(const CommonOpts& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  for (const std::string& s : c.sets) cfg.set_pair(s);
  if (c.seed_given) cfg.set_from_string("rng.seed", std::to_string(c.seed));
  cfg.validate();
  return cfg;
}

// The config a grasp file was produced with; falls back to the CLI-built one
// for files without a meta line.
RunConfig embedded_config(const RecordFile& rf, const RunConfig& fallback) {
  if (rf.config_echo.is_null()) return fallback;
  RunConfig cfg;
  cfg.load_json(rf.config_echo);
  cfg.validate();
  return cfg;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_synthesize(const CommonOpts& common, const std::string& out_path,
                   int threads) {
  RunConfig cfg = build_config(common);
  const HandModel hand = cfg.make_hand();
  const ObjectModel object = cfg.make_object();
  const EnergyParams ep = cfg.energy_params();
  const SamplerConfig sc = cfg.sampler_config();

  const long long chains = cfg.integer("sampler.chains");
  const std::uint64_t seed0 = std::uint64_t(cfg.integer("rng.seed"));
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < chains; ++i) seeds.push_back(seed0 + std::uint64_t(i));

  std::vector<GraspRecord> records =
      synthesize(hand, object, ep, sc, seeds, threads);
  const std::string hash = cfg.hash();
  for (GraspRecord& r : records) r.config_hash = hash;
  write_records(out_path, cfg.echo(), hash, records);

  int successes = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const GraspRecord& r : records) {
    successes += r.success ? 1 : 0;
    best = std::min(best, r.energy.total);
  }
  char line[256];
  std::snprintf(line, sizeof line,
                "chains=%lld successes=%d success_rate=%.3f best_energy=%.6g out=%s",
                chains, successes, double(successes) / double(chains), best,
                out_path.c_str());
  std::cout << line << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& grasps_path) {
  const RecordFile rf = read_records(grasps_path);
  RunConfig cfg = embedded_config(rf, build_config(common));
  const HandModel hand = cfg.make_hand();
  const ObjectModel object = cfg.make_object();
  const EnergyParams ep = cfg.energy_params();

  int mismatches = 0;
  for (std::size_t i = 0; i < rf.records.size(); ++i) {
    const GraspRecord& r = rf.records[i];
    HandPose pose;
    pose.base = make_pose(r.rotation.toRotationMatrix(), r.translation);
    pose.q = r.joints;
    std::vector<int> idx;
    for (const ContactRecord& c : r.contacts) idx.push_back(c.cloud_index);
    const EnergyBreakdown b =
        total_energy(hand, pose, make_contact_set(idx), object, ep);
    const double d_total = std::abs(b.total - r.energy.total);
    const double d_grasp = std::abs(b.e_grasp - r.energy.e_grasp);
    const double d_phy = std::abs(b.e_phy - r.energy.e_phy);
    const bool ok = d_total <= 1e-9 && d_grasp <= 1e-9 && d_phy <= 1e-9;
    mismatches += ok ? 0 : 1;
    char line[256];
    std::snprintf(line, sizeof line,
                  "record %zu seed=%llu stored=%.12g recomputed=%.12g gc=%.6g "
                  "lambda_min=%.6g %s",
                  i, (unsigned long long)r.seed, r.energy.total, b.total,
                  b.fc.gc_norm, b.fc.lambda_min, ok ? "ok" : "MISMATCH");
    std::cout << line << "\n";
  }
  if (mismatches > 0)
    throw std::runtime_error(std::to_string(mismatches) +
                             " record(s) disagree with recomputation");
  std::cout << "all " << rf.records.size() << " records consistent\n";
  return 0;
}

int cmd_oracle(const CommonOpts& common, const std::string& grasps_path) {
  RunConfig cfg = build_config(common);
  const RecordFile rf = read_records(grasps_path);
  const OracleParams op = cfg.oracle_params();

  int passes = 0;
  for (std::size_t i = 0; i < rf.records.size(); ++i) {
    const GraspRecord& r = rf.records[i];
    const int n = int(r.contacts.size());
    Mat3X pos(3, n), nrm(3, n);
    for (int c = 0; c < n; ++c) {
      pos.col(c) = r.contacts[c].position;
      nrm.col(c) = r.contacts[c].inward_normal;
    }
    const bool pass = oracle_force_closure(pos, nrm, op);
    passes += pass ? 1 : 0;
    std::cout << "record " << i << " seed=" << r.seed
              << " oracle=" << (pass ? "true" : "false") << "\n";
  }
  std::cout << "oracle passes: " << passes << "/" << rf.records.size() << "\n";
  return 0;
}

int cmd_landscape(const CommonOpts& common, const std::string& grasps_path,
                  bool toy, int samples_per_well,
                  const std::string& out_path, const std::string& svg_path) {
  RunConfig cfg = build_config(common);
  const GraphOptions opts = cfg.graph_options();
  const std::uint64_t seed = std::uint64_t(cfg.integer("rng.seed"));

  LandscapeGraph graph;
  if (toy) {
    graph = double_well_landscape(samples_per_well, opts, seed);
  } else {
    if (grasps_path.empty())
      throw std::invalid_argument("landscape needs --grasps or --toy");
    const RecordFile rf = read_records(grasps_path);
    RunConfig src = embedded_config(rf, cfg);
    const HandModel hand = src.make_hand();
    const ObjectModel object = src.make_object();
    graph = grasp_landscape(hand, object, src.energy_params(), rf.records, opts,
                            seed);
  }

  nlohmann::ordered_json j = graph_to_json(graph);
  j["config"] = cfg.echo();
  j["config_hash"] = cfg.hash();
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + out_path);
  if (!svg_path.empty()) {
    std::ofstream svg(svg_path, std::ios::binary);
    if (!svg) throw std::runtime_error("cannot open output file: " + svg_path);
    svg << graph_to_svg(graph);
    if (!svg) throw std::runtime_error("write failed: " + svg_path);
  }
  std::cout << "basins=" << graph.basins.size() << " out=" << out_path << "\n";
  return 0;
}

int cmd_contact_map(const CommonOpts& common, const std::string& grasps_path,
                    const std::string& out_path, const std::string& omega_path,
                    int fps) {
  RunConfig cfg = build_config(common);
  const RecordFile rf = read_records(grasps_path);
  RunConfig src = embedded_config(rf, cfg);
  const HandModel hand = src.make_hand();
  const ObjectModel object = src.make_object();
  const ContactMapParams cm = cfg.contact_map_params();

  const MatX omega = embeddings_for_records(hand, object, rf.records, cm);
  const PcaModel pca = fit_pca(omega, cm.dims);
  const MatX scores = pca_transform(pca, omega);

  std::vector<int> rows;
  if (fps > 0) rows = farthest_point_indices(omega, fps);
  else for (int i = 0; i < int(omega.rows()); ++i) rows.push_back(i);

  std::vector<std::string> ids;
  MatX selected(rows.size(), scores.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back(std::to_string(rf.records[rows[i]].seed));
    selected.row(i) = scores.row(rows[i]);
  }
  write_scores_csv(out_path, ids, selected);

  if (!omega_path.empty()) {
    nlohmann::ordered_json extra;
    extra["eps1"] = cm.eps1;
    extra["eps2"] = cm.eps2;
    extra["hand"] = hand.name;
    extra["object"] = object.id;
    extra["config_hash"] = cfg.hash();
    write_omega_binary(omega_path, omega_path + ".json", omega, extra);
  }
  std::cout << "grasps=" << omega.rows() << " rows_out=" << rows.size()
            << " dims=" << scores.cols() << " out=" << out_path << "\n";
  return 0;
}

int cmd_plan_sim(const CommonOpts& common, const std::string& scenarios_path,
                 int make_suite, const std::string& out_path,
                 const std::string& mode) {
  RunConfig cfg = build_config(common);
  const std::uint64_t seed = std::uint64_t(cfg.integer("rng.seed"));

  if (make_suite > 0) {
    save_scenarios(out_path, make_demo_suite(make_suite, seed));
    std::cout << "scenarios=" << make_suite << " out=" << out_path << "\n";
    return 0;
  }
  if (scenarios_path.empty())
    throw std::invalid_argument("plan-sim needs --scenarios or --make-suite");
  const std::vector<Scenario> scenarios = load_scenarios(scenarios_path);
  const PlannerParams pp = cfg.planner_params();

  const bool want_planned = mode == "both" || mode == "non-adaptive";
  const bool want_adaptive = mode == "both" || mode == "adaptive";
  if (!want_planned && !want_adaptive)
    throw std::invalid_argument("unknown --mode: " + mode);

  std::vector<TrialStats> planned, adaptive;
  if (want_planned) planned = run_trials(scenarios, false, pp, seed);
  if (want_adaptive) adaptive = run_trials(scenarios, true, pp, seed);

  std::vector<TrialStats> rows;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (want_planned) rows.push_back(planned[i]);
    if (want_adaptive) rows.push_back(adaptive[i]);
  }
  write_stats_csv(out_path, rows);

  auto mean = [](const std::vector<TrialStats>& v, bool coll) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (const TrialStats& t : v) s += coll ? t.collision_rate : t.success_rate;
    return s / double(v.size());
  };
  std::cout << "scenarios=" << scenarios.size() << " trials=" << pp.trials;
  if (want_planned)
    std::cout << " non_adaptive_success=" << fmt3(mean(planned, false))
              << " non_adaptive_collision=" << fmt3(mean(planned, true));
  if (want_adaptive)
    std::cout << " adaptive_success=" << fmt3(mean(adaptive, false))
              << " adaptive_collision=" << fmt3(mean(adaptive, true));
  std::cout << " out=" << out_path << "\n";
  return 0;
}

int cmd_bench(const CommonOpts& common, const std::string& out_path) {
  RunConfig cfg = build_config(common);
  const FCParams fc = cfg.fc_params();

  auto mesh = std::make_shared<TriMesh>(make_icosphere(0.04, 3));
  const ObjectModel mesh_obj = make_mesh_object(mesh);
  const ObjectModel sphere = make_sphere(0.04);

  std::string report;
  for (const int n : {8, 64}) {
    for (const auto* shape : {"mesh", "sphere"}) {
      const ObjectModel& obj = std::string(shape) == "mesh" ? mesh_obj : sphere;
      const auto samples = sample_surface(obj, n, 17);
      Mat3X pos(3, n);
      for (int i = 0; i < n; ++i) pos.col(i) = samples[i].position;

      std::vector<double> us;
      volatile double sink = 0.0;
      for (int rep = 0; rep < 64; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const FCValue v = relaxed_fc(pos, obj, fc);
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + v.value;
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      }
      std::sort(us.begin(), us.end());
      char line[160];
      std::snprintf(line, sizeof line,
                    "relaxed_fc shape=%s n=%d median_us=%.1f p90_us=%.1f\n", shape,
                    n, us[us.size() / 2], us[(us.size() * 9) / 10]);
      report += line;
    }
  }
  std::cout << report;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << report;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp synthesis, scoring, and landscape toolkit"};
  app.require_subcommand(1);

  CommonOpts c_syn, c_eval, c_orc, c_land, c_cm, c_plan, c_bench;

  auto* syn = app.add_subcommand("synthesize", "run annealed grasp synthesis");
  add_common(syn, c_syn);
  std::string syn_out = "grasps.jsonl";
  int syn_threads = 1;
  syn->add_option("--out", syn_out, "output JSONL path");
  syn->add_option("--threads", syn_threads, "worker threads (results identical)");

  auto* eval = app.add_subcommand("evaluate", "recompute and verify a grasp file");
  add_common(eval, c_eval);
  std::string eval_grasps;
  eval->add_option("--grasps", eval_grasps, "grasp JSONL path")->required();

  auto* orc = app.add_subcommand("oracle", "sampled-cone certificate per grasp");
  add_common(orc, c_orc);
  std::string orc_grasps;
  orc->add_option("--grasps", orc_grasps, "grasp JSONL path")->required();

  auto* land = app.add_subcommand("landscape", "basin and barrier analysis");
  add_common(land, c_land);
  std::string land_grasps, land_out = "landscape.json", land_svg;
  bool land_toy = false;
  int land_spw = 50;
  land->add_option("--grasps", land_grasps, "grasp JSONL path");
  land->add_flag("--toy", land_toy, "use the analytic double-well surrogate");
  land->add_option("--samples-per-well", land_spw, "toy sample count per well");
  land->add_option("--out", land_out, "graph JSON path");
  land->add_option("--svg", land_svg, "dendrogram SVG path");

  auto* cm = app.add_subcommand("contact-map", "embedding, PCA, and FPS export");
  add_common(cm, c_cm);
  std::string cm_grasps, cm_out = "contact_map.csv", cm_omega;
  int cm_fps = 0;
  cm->add_option("--grasps", cm_grasps, "grasp JSONL path")->required();
  cm->add_option("--out", cm_out, "scores CSV path");
  cm->add_option("--omega-out", cm_omega, "raw embedding binary path");
  cm->add_option("--fps", cm_fps, "restrict CSV to K farthest-point rows");

  auto* plan = app.add_subcommand("plan-sim", "adaptive replanning trials");
  add_common(plan, c_plan);
  std::string plan_scen, plan_out = "plan_stats.csv", plan_mode = "both";
  int plan_make = 0;
  plan->add_option("--scenarios", plan_scen, "scenario suite JSON");
  plan->add_option("--make-suite", plan_make, "write an N-scenario demo suite");
  plan->add_option("--out", plan_out, "stats CSV (or suite JSON) path");
  plan->add_option("--mode", plan_mode, "both | adaptive | non-adaptive");

  auto* bench = app.add_subcommand("bench", "score timing report");
  add_common(bench, c_bench);
  std::string bench_out;
  bench->add_option("--out", bench_out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*syn) return cmd_synthesize(c_syn, syn_out, syn_threads);
    if (*eval) return cmd_evaluate(c_eval, eval_grasps);
    if (*orc) return cmd_oracle(c_orc, orc_grasps);
    if (*land)
      return cmd_landscape(c_land, land_grasps, land_toy, land_spw, land_out,
                           land_svg);
    if (*cm) return cmd_contact_map(c_cm, cm_grasps, cm_out, cm_omega, cm_fps);
    if (*plan) return cmd_plan_sim(c_plan, plan_scen, plan_make, plan_out, plan_mode);
    if (*bench) return cmd_bench(c_bench, bench_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
