#include "gsynth/landscape.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace gsynth {

namespace {

double json_barrier(const nlohmann::json& v) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json graph_to_json(const LandscapeGraph& g) {
  nlohmann::ordered_json j;
  j["type"] = "landscape";
  j["basins"] = nlohmann::ordered_json::array();
  for (const auto& b : g.basins) {
    nlohmann::ordered_json bj;
    bj["id"] = b.id;
    bj["energy"] = b.energy;
    bj["size"] = b.size;
    bj["representative"] = nlohmann::ordered_json::array();
    for (int i = 0; i < b.representative.size(); ++i)
      bj["representative"].push_back(b.representative(i));
    j["basins"].push_back(bj);
  }
  j["barriers"] = nlohmann::ordered_json::array();
  const int n = int(g.basins.size());
  for (int i = 0; i < n; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int k = 0; k < n; ++k) {
      const double v = g.barriers(i, k);
      if (std::isfinite(v)) row.push_back(v);
      else row.push_back(nullptr);
    }
    j["barriers"].push_back(row);
  }
  j["assignment"] = g.assignment;
  return j;
}

LandscapeGraph graph_from_json(const nlohmann::json& j) {
  if (j.value("type", std::string()) != "landscape")
    throw std::invalid_argument("landscape file: missing type 'landscape'");
  LandscapeGraph g;
  for (const auto& bj : j.at("basins")) {
    LandscapeGraph::Basin b;
    b.id = bj.at("id").get<int>();
    b.energy = bj.at("energy").get<double>();
    b.size = bj.at("size").get<int>();
    const auto& rep = bj.at("representative");
    b.representative.resize(rep.size());
    for (std::size_t i = 0; i < rep.size(); ++i)
      b.representative(i) = rep[i].get<double>();
    g.basins.push_back(b);
  }
  const int n = int(g.basins.size());
  g.barriers = MatX::Constant(n, n, std::numeric_limits<double>::infinity());
  const auto& rows = j.at("barriers");
  if (int(rows.size()) != n)
    throw std::invalid_argument("landscape file: barrier matrix size mismatch");
  for (int i = 0; i < n; ++i) {
    if (int(rows[i].size()) != n)
      throw std::invalid_argument("landscape file: barrier matrix size mismatch");
    for (int k = 0; k < n; ++k) g.barriers(i, k) = json_barrier(rows[i][k]);
  }
  g.assignment = j.value("assignment", std::vector<int>());
  return g;
}

namespace {

struct DendroNode {
  int basin = -1;           // leaf only
  int left = -1, right = -1;
  double height = 0.0;      // merge barrier, leaf energy for leaves
  double x = 0.0;
};

// Single linkage over the barrier matrix; unreachable pairs merge at `top`.
std::vector<DendroNode> build_dendrogram(const LandscapeGraph& g, double top,
                                         int* root_out) {
  const int n = int(g.basins.size());
  std::vector<DendroNode> nodes(n);
  for (int i = 0; i < n; ++i) {
    nodes[i].basin = i;
    nodes[i].height = g.basins[i].energy;
  }
  struct Cluster {
    int node;
    std::vector<int> members;
  };
  std::vector<Cluster> act;
  for (int i = 0; i < n; ++i) act.push_back({i, {i}});

  while (act.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < act.size(); ++i)
      for (std::size_t j = i + 1; j < act.size(); ++j) {
        double h = std::numeric_limits<double>::infinity();
        for (int a : act[i].members)
          for (int b : act[j].members) h = std::min(h, g.barriers(a, b));
        if (h < best) {
          best = h;
          bi = i;
          bj = j;
        }
      }
    if (!std::isfinite(best)) best = top;
    DendroNode parent;
    parent.left = act[bi].node;
    parent.right = act[bj].node;
    parent.height = best;
    nodes.push_back(parent);
    Cluster merged;
    merged.node = int(nodes.size()) - 1;
    merged.members = act[bi].members;
    merged.members.insert(merged.members.end(), act[bj].members.begin(),
                          act[bj].members.end());
    act.erase(act.begin() + bj);
    act.erase(act.begin() + bi);
    act.push_back(merged);
  }
  *root_out = act.empty() ? -1 : act[0].node;
  return nodes;
}

double assign_x(std::vector<DendroNode>& nodes, int idx, double* next_leaf_x,
                double leaf_dx) {
  DendroNode& nd = nodes[idx];
  if (nd.basin >= 0) {
    nd.x = *next_leaf_x;
    *next_leaf_x += leaf_dx;
    return nd.x;
  }
  const double xl = assign_x(nodes, nd.left, next_leaf_x, leaf_dx);
  const double xr = assign_x(nodes, nd.right, next_leaf_x, leaf_dx);
  nd.x = 0.5 * (xl + xr);
  return nd.x;
}

}  // namespace

std::string graph_to_svg(const LandscapeGraph& g) {
  const int n = int(g.basins.size());
  const double W = 640, H = 480, M = 48;

  double emin = 0.0, emax = 1.0;
  if (n > 0) {
    emin = emax = g.basins[0].energy;
    for (const auto& b : g.basins) {
      emin = std::min(emin, b.energy);
      emax = std::max(emax, b.energy);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::isfinite(g.barriers(i, j))) emax = std::max(emax, g.barriers(i, j));
  }
  if (emax - emin < 1e-12) emax = emin + 1.0;
  const double top = emax + 0.15 * (emax - emin);

  auto ypix = [&](double e) {
    return H - M - (e - emin) / (top - emin) * (H - 2 * M);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) +
         "\" height=\"" + fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) +
         "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (n == 0) {
    svg += "<text x=\"20\" y=\"40\" font-family=\"monospace\">empty landscape</text>\n";
    svg += "</svg>\n";
    return svg;
  }

  int root = -1;
  std::vector<DendroNode> nodes = build_dendrogram(g, top, &root);
  const double leaf_dx = (W - 2 * M) / std::max(1, n - 1 + (n == 1));
  double cursor = M;
  if (root >= 0) assign_x(nodes, root, &cursor, n > 1 ? leaf_dx : 0.0);

  // Connectors: vertical risers from each child up to the merge height, one
  // horizontal bar across.
  for (std::size_t i = std::size_t(n); i < nodes.size(); ++i) {
    const DendroNode& nd = nodes[i];
    const DendroNode& l = nodes[nd.left];
    const DendroNode& r = nodes[nd.right];
    const double ym = ypix(nd.height);
    svg += "<line x1=\"" + fmt(l.x) + "\" y1=\"" + fmt(ypix(l.height)) +
           "\" x2=\"" + fmt(l.x) + "\" y2=\"" + fmt(ym) +
           "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg += "<line x1=\"" + fmt(r.x) + "\" y1=\"" + fmt(ypix(r.height)) +
           "\" x2=\"" + fmt(r.x) + "\" y2=\"" + fmt(ym) +
           "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg += "<line x1=\"" + fmt(l.x) + "\" y1=\"" + fmt(ym) + "\" x2=\"" +
           fmt(r.x) + "\" y2=\"" + fmt(ym) +
           "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  for (int i = 0; i < n; ++i) {
    const DendroNode& nd = nodes[i];
    const double y = ypix(nd.height);
    svg += "<circle cx=\"" + fmt(nd.x) + "\" cy=\"" + fmt(y) +
           "\" r=\"3.5\" fill=\"black\"/>\n";
    svg += "<text x=\"" + fmt(nd.x + 5) + "\" y=\"" + fmt(y + 12) +
           "\" font-family=\"monospace\" font-size=\"11\">b" +
           std::to_string(g.basins[i].id) + " E=" + fmt(g.basins[i].energy) +
           " n=" + std::to_string(g.basins[i].size) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

double GraspStateModel::energy(const State& x) const {
  return total_energy(*hand, x, contacts, *object, *ep).total;
}

double GraspStateModel::energy_grad(const State& x, VecX& g) const {
  return energy_gradient(*hand, x, contacts, *object, *ep, g).total;
}

HandPose GraspStateModel::retract(const State& x, const VecX& s) const {
  return retract_pose(x, s);
}

VecX GraspStateModel::tangent_difference(const State& a, const State& b) const {
  VecX d(6 + a.q.size());
  d.head<3>() = so3_log(Mat3(b.base.linear() * a.base.linear().transpose()));
  d.segment<3>(3) = b.base.translation() - a.base.translation();
  d.tail(a.q.size()) = b.q - a.q;
  return d;
}

VecX GraspStateModel::flatten(const State& x) const {
  VecX v(7 + x.q.size());
  const Quat q(x.base.linear());
  v.head<3>() = x.base.translation();
  v.segment<4>(3) << q.w(), q.x(), q.y(), q.z();
  v.tail(x.q.size()) = x.q;
  return v;
}

LandscapeGraph grasp_landscape(const HandModel& hand, const ObjectModel& object,
                               const EnergyParams& ep,
                               const std::vector<GraspRecord>& records,
                               const GraphOptions& o, std::uint64_t seed) {
  // Mirrors build_graph, except each sample carries its own contact set:
  // descents run under the sample's contacts, connectivity chains under the
  // departing minimum's contacts.
  LandscapeGraph g;
  std::vector<HandPose> reps;
  std::vector<ContactSet> rep_contacts;

  GraspStateModel model{&hand, &object, &ep, {}};

  for (std::size_t s = 0; s < records.size(); ++s) {
    const GraspRecord& rec = records[s];
    HandPose pose;
    pose.base = make_pose(rec.rotation.toRotationMatrix(), rec.translation);
    pose.q = rec.joints;

    std::vector<int> idx;
    for (const ContactRecord& c : rec.contacts) idx.push_back(c.cloud_index);
    model.contacts = make_contact_set(idx);
    const DescendResult<GraspStateModel> d = descend(model, pose, o.descend);
    const ContactSet d_contacts = model.contacts;

    int joined = -1;
    for (std::size_t b = 0; b < reps.size(); ++b) {
      if (model.tangent_difference(d.x, reps[b]).norm() <= o.merge_tol) {
        joined = int(b);
        break;
      }
    }

    std::vector<double> est(reps.size(), std::numeric_limits<double>::infinity());
    if (joined < 0) {
      for (std::size_t b = 0; b < reps.size(); ++b) {
        for (int a = 0; a < o.ad_attempts; ++a) {
          model.contacts = d_contacts;
          Rng rng{seed, std::uint64_t(s), std::uint64_t(b), std::uint64_t(a), 0xadull};
          const AdResult fwd = attraction_diffusion(model, d.x, reps[b], o.ad, rng);
          if (fwd.reached) est[b] = std::min(est[b], fwd.barrier);
          model.contacts = rep_contacts[b];
          Rng rng2{seed, std::uint64_t(s), std::uint64_t(b), std::uint64_t(a), 0xdbull};
          const AdResult rev = attraction_diffusion(model, reps[b], d.x, o.ad, rng2);
          if (rev.reached) est[b] = std::min(est[b], rev.barrier);
        }
      }
      double best_excess = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < reps.size(); ++b) {
        const double floor = std::max(d.energy, g.basins[b].energy);
        const double excess = est[b] - floor;
        if (excess <= o.barrier_merge_eps && excess < best_excess) {
          best_excess = excess;
          joined = int(b);
        }
      }
    }

    model.contacts = d_contacts;
    if (joined < 0) {
      LandscapeGraph::Basin basin;
      basin.id = int(reps.size());
      basin.energy = d.energy;
      basin.representative = model.flatten(d.x);
      basin.size = 1;
      reps.push_back(d.x);
      rep_contacts.push_back(d_contacts);
      g.basins.push_back(basin);
      const int nb = int(reps.size());
      MatX grown = MatX::Constant(nb, nb, std::numeric_limits<double>::infinity());
      if (nb > 1) grown.topLeftCorner(nb - 1, nb - 1) = g.barriers;
      for (int b = 0; b + 1 < nb; ++b) {
        grown(nb - 1, b) = est[b];
        grown(b, nb - 1) = est[b];
      }
      g.barriers = grown;
      joined = basin.id;
    } else {
      LandscapeGraph::Basin& basin = g.basins[joined];
      basin.size += 1;
      if (d.energy < basin.energy) {
        basin.energy = d.energy;
        basin.representative = model.flatten(d.x);
        reps[joined] = d.x;
        rep_contacts[joined] = d_contacts;
      }
      for (std::size_t b = 0; b < est.size(); ++b) {
        if (int(b) == joined) continue;
        if (est[b] < g.barriers(joined, int(b))) {
          g.barriers(joined, int(b)) = est[b];
          g.barriers(int(b), joined) = est[b];
        }
      }
    }
    g.assignment.push_back(joined);
  }

  const int nb = int(g.basins.size());
  for (int i = 0; i < nb; ++i) {
    g.barriers(i, i) = g.basins[i].energy;
    for (int j = 0; j < nb; ++j) {
      if (i == j) continue;
      if (std::isfinite(g.barriers(i, j)))
        g.barriers(i, j) = std::max(
            g.barriers(i, j), std::max(g.basins[i].energy, g.basins[j].energy));
    }
  }
  return g;
}

VecModel double_well_model() {
  VecModel m;
  m.f = [](const VecX& x) {
    const double t = x(0) * x(0) - 1.0;
    return t * t;
  };
  m.df = [](const VecX& x) {
    VecX g(1);
    g(0) = 4.0 * x(0) * (x(0) * x(0) - 1.0);
    return g;
  };
  return m;
}

LandscapeGraph double_well_landscape(int samples_per_well, const GraphOptions& o,
                                     std::uint64_t seed) {
  const VecModel m = double_well_model();
  Rng rng{seed, 0xd0b1e3e11ull};
  std::vector<VecX> samples;
  for (int i = 0; i < samples_per_well; ++i) {
    VecX x(1);
    x(0) = -1.0 + rng.uniform(-0.25, 0.25);
    samples.push_back(x);
  }
  for (int i = 0; i < samples_per_well; ++i) {
    VecX x(1);
    x(0) = 1.0 + rng.uniform(-0.25, 0.25);
    samples.push_back(x);
  }
  return build_graph(m, samples, o, seed);
}

}  // namespace gsynth
