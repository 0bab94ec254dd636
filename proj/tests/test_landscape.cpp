#include <doctest.h>

#include "gsynth/landscape.hpp"

using namespace gsynth;

namespace {

VecX scalar_state(double v) {
  VecX x(1);
  x(0) = v;
  return x;
}

GraphOptions toy_options() {
  GraphOptions o;
  o.ad.sigma = 0.05;
  o.ad.temperature = 0.05;
  o.ad.max_steps = 2000;
  return o;
}

}  // namespace

TEST_CASE("descent finds the nearest well of the double well") {
  const VecModel m = double_well_model();
  DescendOptions o;
  const auto right = descend(m, scalar_state(0.4), o);
  CHECK(right.converged);
  CHECK(right.x(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(right.energy == doctest::Approx(0.0).epsilon(1e-6));
  const auto left = descend(m, scalar_state(-2.3), o);
  CHECK(left.x(0) == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("descent handles a high-dimensional quadratic") {
  VecModel m;
  m.f = [](const VecX& x) { return 0.5 * x.squaredNorm(); };
  m.df = [](const VecX& x) { return x; };
  DescendOptions o;
  VecX x0 = VecX::LinSpaced(10, -2.0, 2.0);
  const auto r = descend(m, x0, o);
  CHECK(r.converged);
  CHECK(r.x.norm() < 1e-3);
}

TEST_CASE("attraction-diffusion crosses the double-well saddle") {
  const VecModel m = double_well_model();
  AdOptions o;
  o.magnet = 5.0;
  o.temperature = 0.05;
  o.sigma = 0.05;
  o.max_steps = 2000;
  o.reach_tol = 0.05;
  Rng rng{99};
  const AdResult r = attraction_diffusion(m, scalar_state(-1.0), scalar_state(1.0), o, rng);
  REQUIRE(r.reached);
  // The saddle at x = 0 has energy 1; the discrete path overshoots a little.
  CHECK(r.barrier >= 0.8);
  CHECK(r.barrier <= 1.2);
}

TEST_CASE("attraction-diffusion freezes at vanishing temperature") {
  const VecModel m = double_well_model();
  AdOptions o;
  o.temperature = 1e-9;
  o.sigma = 0.05;
  o.max_steps = 300;
  Rng rng{100};
  const AdResult r = attraction_diffusion(m, scalar_state(-1.0), scalar_state(1.0), o, rng);
  CHECK(!r.reached);
  CHECK(std::isinf(r.barrier));
}

TEST_CASE("double-well landscape splits evenly with the known barrier") {
  const LandscapeGraph g = double_well_landscape(50, toy_options(), 0);
  REQUIRE(g.basins.size() == 2);
  CHECK(g.basins[0].size == 50);
  CHECK(g.basins[1].size == 50);
  CHECK(g.assignment.size() == 100);
  const double r0 = g.basins[0].representative(0);
  const double r1 = g.basins[1].representative(0);
  CHECK(std::abs(r0) == doctest::Approx(1.0).epsilon(5e-2));
  CHECK(std::abs(r1) == doctest::Approx(1.0).epsilon(5e-2));
  CHECK(r0 * r1 < 0.0);  // opposite wells
  CHECK(g.basins[0].energy == doctest::Approx(0.0).epsilon(1e-4));
  const double barrier = g.barriers(0, 1);
  CHECK(barrier == doctest::Approx(1.0).epsilon(0.2));
  CHECK(g.barriers(1, 0) == barrier);
  CHECK(g.barriers(0, 0) == g.basins[0].energy);
}

TEST_CASE("one cluster of samples makes one basin") {
  VecModel m;
  m.f = [](const VecX& x) { return 0.5 * x.squaredNorm(); };
  m.df = [](const VecX& x) { return x; };
  std::vector<VecX> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(scalar_state(-0.5 + 0.1 * i));
  const LandscapeGraph g = build_graph(m, samples, toy_options(), 7);
  REQUIRE(g.basins.size() == 1);
  CHECK(g.basins[0].size == 10);
  CHECK(g.barriers.rows() == 1);
  CHECK(g.barriers(0, 0) == doctest::Approx(g.basins[0].energy));
}

TEST_CASE("barriers never sit below either endpoint basin") {
  // Three tilted wells; every finite crossing estimate is clamped.
  VecModel m;
  m.f = [](const VecX& x) {
    const double v = x(0);
    return (v * v - 1.0) * (v * v - 1.0) * (v - 2.0) * (v - 2.0) * 0.1 + 0.3 * v;
  };
  m.df = [m](const VecX& x) {
    VecX g(1);
    const double h = 1e-6;
    VecX a = x, b = x;
    a(0) += h;
    b(0) -= h;
    g(0) = (m.f(a) - m.f(b)) / (2 * h);
    return g;
  };
  std::vector<VecX> samples;
  for (int i = 0; i < 30; ++i) samples.push_back(scalar_state(-1.6 + 0.13 * i));
  const LandscapeGraph g = build_graph(m, samples, toy_options(), 3);
  const int nb = int(g.basins.size());
  REQUIRE(nb >= 2);
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nb; ++j) {
      if (i == j || !std::isfinite(g.barriers(i, j))) continue;
      CHECK(g.barriers(i, j) >= std::max(g.basins[i].energy, g.basins[j].energy) - 1e-12);
      CHECK(g.barriers(i, j) == g.barriers(j, i));
    }
  }
}

TEST_CASE("landscape graphs round-trip through json") {
  const LandscapeGraph g = double_well_landscape(20, toy_options(), 1);
  const auto j = graph_to_json(g);
  const LandscapeGraph h = graph_from_json(j);
  REQUIRE(h.basins.size() == g.basins.size());
  for (size_t b = 0; b < g.basins.size(); ++b) {
    CHECK(h.basins[b].id == g.basins[b].id);
    CHECK(h.basins[b].energy == g.basins[b].energy);
    CHECK(h.basins[b].size == g.basins[b].size);
    CHECK((h.basins[b].representative - g.basins[b].representative).norm() == 0.0);
  }
  CHECK(h.assignment == g.assignment);
  for (int i = 0; i < g.barriers.rows(); ++i)
    for (int k = 0; k < g.barriers.cols(); ++k) {
      if (std::isfinite(g.barriers(i, k)))
        CHECK(h.barriers(i, k) == g.barriers(i, k));
      else
        CHECK(std::isinf(h.barriers(i, k)));  // infinity crosses as null
    }
  CHECK_THROWS_AS(graph_from_json(nlohmann::json{{"type", "other"}}),
                  std::invalid_argument);
}

TEST_CASE("dendrogram svg is complete and deterministic") {
  const LandscapeGraph g = double_well_landscape(20, toy_options(), 1);
  const std::string svg = graph_to_svg(g);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("b0") != std::string::npos);
  CHECK(svg.find("b1") != std::string::npos);
  CHECK(graph_to_svg(g) == svg);
}

TEST_CASE("grasp state model is a consistent mcmc model") {
  const HandModel hand = builtin_hand("ftac15");
  const ObjectModel object = make_sphere(0.04);
  EnergyParams ep;
  GraspStateModel m{&hand, &object, &ep, make_contact_set({3, 500, 900, 1500})};

  HandPose a;
  a.q = VecX::Constant(15, 0.4);
  a.base.translation() = Vec3(0, 0, 0.25);

  // flatten: translation, quaternion (w first), joints.
  const VecX flat = m.flatten(a);
  REQUIRE(flat.size() == 7 + 15);
  CHECK(flat(0) == 0.0);
  CHECK(flat(2) == 0.25);
  CHECK(flat(3) == doctest::Approx(1.0));  // identity quaternion, w
  CHECK(flat(7) == doctest::Approx(0.4));

  // tangent_difference inverts retract to first order.
  VecX t = VecX::Zero(21);
  t(1) = 0.05;
  t(4) = -0.02;
  t(8) = 0.03;
  const HandPose b = m.retract(a, t);
  const VecX d = m.tangent_difference(a, b);
  CHECK((d - t).norm() < 1e-9);
  CHECK(m.tangent_difference(a, a).norm() == 0.0);

  // energy_grad agrees with the standalone energy path.
  VecX g;
  const double e = m.energy_grad(a, g);
  CHECK(e == doctest::Approx(m.energy(a)).epsilon(1e-12));
  CHECK(g.size() == 21);
}

TEST_CASE("grasp landscape groups rediscoveries of the same minimum") {
  const HandModel hand = builtin_hand("ftac15");
  const ObjectModel object = make_sphere(0.04);
  EnergyParams ep;
  ep.fc.epsilon = 1e-4;
  SamplerConfig cfg;
  cfg.steps = 150;
  cfg.oracle.margin = 0.005;

  std::vector<GraspRecord> records;
  for (std::uint64_t s = 0; s < 3; ++s)
    records.push_back(synthesize_one(hand, object, ep, cfg, s));
  // Duplicate one record: its descent lands in exactly the same minimum, so
  // the duplicate must never open a new basin.
  records.push_back(records[0]);

  GraphOptions o;
  o.ad.max_steps = 150;
  o.ad_attempts = 1;
  o.descend.max_steps = 60;
  const LandscapeGraph g = grasp_landscape(hand, object, ep, records, o, 0);
  CHECK(g.assignment.size() == 4);
  CHECK(int(g.basins.size()) <= 3);
  CHECK(g.assignment[3] == g.assignment[0]);

  const LandscapeGraph g2 = grasp_landscape(hand, object, ep, records, o, 0);
  CHECK(graph_to_json(g).dump() == graph_to_json(g2).dump());
}
