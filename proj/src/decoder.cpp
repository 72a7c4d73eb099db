#include "qup/decoder.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "json.hpp"
#include "qup/f2.hpp"
#include "qup/matching.hpp"
#include "qup/rng.hpp"

namespace qup {

namespace {

std::vector<uint8_t> membership_mask(const std::vector<int>& sites, int n) {
  std::vector<uint8_t> mask(n, 0);
  for (int s : sites) mask[s] = 1;
  return mask;
}

// Fix string for a gauge check: a dual-type Pauli that anticommutes with the
// gauge check, commutes with every other check of the sector and with the
// sector's logical. Commutation with same-type operators is automatic.
std::vector<int> solve_frame(const std::vector<Stabilizer>& checks, size_t gauge_index,
                             const std::vector<int>& membrane, int nsites) {
  std::vector<F2Vec> rows;
  std::vector<uint8_t> rhs;
  for (size_t i = 0; i < checks.size(); ++i) {
    F2Vec r(nsites);
    for (int s : checks[i].sites) r.set(s);
    rows.push_back(r);
    rhs.push_back(i == gauge_index ? 1 : 0);
  }
  F2Vec lr(nsites);
  for (int s : membrane) lr.set(s);
  rows.push_back(lr);
  rhs.push_back(0);
  auto sol = f2_solve(nsites, rows, rhs);
  if (!sol) throw std::logic_error("gauge fix string has no solution");
  std::vector<int> support;
  for (int i = 0; i < nsites; ++i)
    if (sol->get(i)) support.push_back(i);
  return support;
}

int overlap_parity(const std::vector<int>& a, const std::vector<uint8_t>& mask) {
  int par = 0;
  for (int s : a) par ^= mask[s];
  return par;
}

}  // namespace

DecodingGraph build_decoding_graph(const GrowthLayout& layout, int T, Sector sector) {
  if (T < layout.d2) throw std::invalid_argument("round count must be at least d2");
  DecodingGraph g;
  g.sector = sector;
  g.d1 = layout.d1;
  g.d2 = layout.d2;
  g.T = T;
  const CodePatch& patch = layout.patch;
  const auto& checks = (sector == Sector::X) ? patch.x_stabilizers : patch.z_stabilizers;
  g.num_stabs = static_cast<int>(checks.size());
  g.membrane = (sector == Sector::X) ? patch.logical_x : patch.logical_z;
  g.other_logical = (sector == Sector::X) ? patch.logical_z : patch.logical_x;

  DeterministicInfo info = deterministic_initial_measurements(layout);
  const auto& det = (sector == Sector::X) ? info.deterministic_x : info.deterministic_z;
  g.t0_detector.assign(g.num_stabs, -1);
  for (int s : det) g.t0_detector[s] = g.t0_count++;
  for (int s = 0; s < g.num_stabs; ++s)
    if (g.t0_detector[s] < 0) g.gauge_stabs.push_back(s);
  g.num_detectors = g.t0_count + (T - 1) * g.num_stabs;

  const int nsites = g.d2 * g.d2;
  std::vector<std::vector<int>> site_checks(nsites);
  for (int s = 0; s < g.num_stabs; ++s)
    for (int v : checks[s].sites) site_checks[v].push_back(s);
  std::vector<uint8_t> on_membrane = membership_mask(g.membrane, nsites);

  g.gauge_infer_edges.assign(g.gauge_stabs.size(), {});
  std::vector<int> gauge_pos(g.num_stabs, -1);
  for (size_t k = 0; k < g.gauge_stabs.size(); ++k) gauge_pos[g.gauge_stabs[k]] = int(k);

  auto push_edge = [&](FaultEdge e) {
    if (e.a < 0 && e.b < 0) throw std::logic_error("fault with no detector");
    if (e.a < 0) std::swap(e.a, e.b);
    g.edges.push_back(e);
  };

  // Initialization faults on new sites at t=0: only the component that the
  // fresh basis state does not absorb is physical, and it is visible solely
  // in the deterministic t=0 layer.
  InitBasis hurt = (sector == Sector::X) ? InitBasis::Plus : InitBasis::Zero;
  for (int v = 0; v < nsites; ++v) {
    auto it = layout.init_basis.find(v);
    if (it == layout.init_basis.end() || it->second != hurt) continue;
    FaultEdge e;
    e.kind = FaultKind::Init;
    e.site = v;
    e.round = 0;
    e.crosses_logical = on_membrane[v];
    for (int s : site_checks[v]) {
      int id = g.t0_detector[s];
      if (id < 0) continue;
      (e.a < 0 ? e.a : e.b) = id;
    }
    if (e.a < 0 && e.b < 0) {
      // Both plaquettes gauge: the fault only relabels random outcomes and
      // commutes with the logicals, so it has no observable effect at all.
      if (e.crosses_logical)
        throw std::logic_error("undetectable init fault crosses the readout membrane");
      continue;
    }
    int edge_id = static_cast<int>(g.edges.size());
    push_edge(e);
    for (int s : site_checks[v])
      if (gauge_pos[s] >= 0) g.gauge_infer_edges[gauge_pos[s]].push_back(edge_id);
  }

  // Data faults between consecutive rounds; both flagged comparisons live in
  // the later round's layer.
  for (int t = 1; t <= T - 1; ++t)
    for (int v = 0; v < nsites; ++v) {
      FaultEdge e;
      e.kind = FaultKind::Data;
      e.site = v;
      e.round = t;
      e.crosses_logical = on_membrane[v];
      for (int s : site_checks[v]) (e.a < 0 ? e.a : e.b) = g.comparison_id(s, t);
      push_edge(e);
    }

  // Measurement faults; the closing round t = T-1 is noiseless. A misread at
  // t=0 flips the t=0 detector (when deterministic) and the first comparison.
  for (int t = 0; t <= T - 2; ++t)
    for (int s = 0; s < g.num_stabs; ++s) {
      FaultEdge e;
      e.kind = FaultKind::Measurement;
      e.site = s;
      e.round = t;
      if (t == 0) {
        e.a = g.t0_detector[s];
        e.b = g.comparison_id(s, 1);
        if (e.a < 0) std::swap(e.a, e.b);
      } else {
        e.a = g.comparison_id(s, t);
        e.b = g.comparison_id(s, t + 1);
      }
      int edge_id = static_cast<int>(g.edges.size());
      push_edge(e);
      if (t == 0 && gauge_pos[s] >= 0)
        g.gauge_infer_edges[gauge_pos[s]].push_back(edge_id);
    }

  for (size_t k = 0; k < g.gauge_stabs.size(); ++k)
    g.gauge_frames.push_back(
        solve_frame(checks, size_t(g.gauge_stabs[k]), g.membrane, nsites));

  g.adj.assign(g.num_detectors, {});
  std::vector<std::pair<int, int>> boundary_seed;
  for (size_t i = 0; i < g.edges.size(); ++i) {
    const FaultEdge& e = g.edges[i];
    if (e.b >= 0) {
      g.adj[e.a].push_back({e.b, int(i)});
      g.adj[e.b].push_back({e.a, int(i)});
    } else {
      boundary_seed.push_back({e.a, int(i)});
    }
  }
  g.boundary_dist.assign(g.num_detectors, -1);
  g.boundary_edge.assign(g.num_detectors, -1);
  g.boundary_prev.assign(g.num_detectors, -1);
  std::deque<int> bfs;
  for (auto [u, e] : boundary_seed)
    if (g.boundary_dist[u] < 0) {
      g.boundary_dist[u] = 1;
      g.boundary_edge[u] = e;
      bfs.push_back(u);
    }
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop_front();
    for (auto [v, e] : g.adj[u])
      if (g.boundary_dist[v] < 0) {
        g.boundary_dist[v] = g.boundary_dist[u] + 1;
        g.boundary_edge[v] = e;
        g.boundary_prev[v] = u;
        bfs.push_back(v);
      }
  }
  return g;
}

std::vector<int> sample_faults(const DecodingGraph& g, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("fault rate must be in [0, 1)");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> fired;
  for (size_t i = 0; i < g.edges.size(); ++i)
    if (u(rng) < p) fired.push_back(int(i));
  return fired;
}

std::vector<uint8_t> syndrome_of(const DecodingGraph& g, const std::vector<int>& fault_edges) {
  std::vector<uint8_t> syn(g.num_detectors, 0);
  for (int i : fault_edges) {
    const FaultEdge& e = g.edges.at(size_t(i));
    syn[e.a] ^= 1;
    if (e.b >= 0) syn[e.b] ^= 1;
  }
  return syn;
}

std::vector<int> decode(const DecodingGraph& g, const std::vector<uint8_t>& syndrome) {
  if (static_cast<int>(syndrome.size()) != g.num_detectors)
    throw std::invalid_argument("syndrome length mismatch");
  std::vector<int> defects;
  for (int i = 0; i < g.num_detectors; ++i)
    if (syndrome[i]) defects.push_back(i);
  if (defects.empty()) return {};
  const int F = static_cast<int>(defects.size());

  // Hop distances and shortest-path trees from every defect.
  std::vector<std::vector<int>> dist(F), par_edge(F), par_det(F);
  for (int i = 0; i < F; ++i) {
    dist[i].assign(g.num_detectors, -1);
    par_edge[i].assign(g.num_detectors, -1);
    par_det[i].assign(g.num_detectors, -1);
    std::deque<int> bfs{defects[i]};
    dist[i][defects[i]] = 0;
    while (!bfs.empty()) {
      int u = bfs.front();
      bfs.pop_front();
      for (auto [v, e] : g.adj[u])
        if (dist[i][v] < 0) {
          dist[i][v] = dist[i][u] + 1;
          par_edge[i][v] = e;
          par_det[i][v] = u;
          bfs.push_back(v);
        }
    }
  }

  // Complete graph on defects plus one boundary twin per defect; twins are
  // free to pair among themselves.
  std::vector<WeightedEdge> medges;
  for (int i = 0; i < F; ++i) {
    for (int j = i + 1; j < F; ++j) {
      int d = dist[i][defects[j]];
      if (d >= 0) medges.push_back({i, j, d});
      medges.push_back({F + i, F + j, 0});
    }
    int bd = g.boundary_dist[defects[i]];
    if (bd >= 0) medges.push_back({i, F + i, bd});
  }
  std::vector<std::pair<int, int>> pairs;
  try {
    pairs = min_weight_perfect_matching(2 * F, medges);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("syndrome not matchable: detector graph invariant broken");
  }

  std::vector<int> use_count(g.edges.size(), 0);
  auto walk_boundary = [&](int det) {
    for (int cur = det; cur >= 0; cur = g.boundary_prev[cur])
      ++use_count[g.boundary_edge[cur]];
  };
  for (auto [a, b] : pairs) {
    if (a >= F && b >= F) continue;  // twin-twin pair, no path
    if (b >= F) {
      if (b == F + a)
        walk_boundary(defects[a]);
      else
        throw std::logic_error("twin matched to a foreign defect");
      continue;
    }
    // defect-defect: walk b back to a in a's tree
    for (int cur = defects[b]; cur != defects[a]; cur = par_det[a][cur])
      ++use_count[par_edge[a][cur]];
  }
  std::vector<int> correction;
  for (size_t i = 0; i < use_count.size(); ++i)
    if (use_count[i] % 2) correction.push_back(int(i));
  return correction;
}

bool crossing_parity(const DecodingGraph& g, const std::vector<int>& edge_ids) {
  bool par = false;
  for (int i : edge_ids) par ^= g.edges.at(size_t(i)).crosses_logical;
  return par;
}

namespace {

struct SectorShot {
  std::vector<int> faults, correction;
  std::vector<uint8_t> syndrome;
  bool flip = false;
  std::vector<uint8_t> raws;
  std::vector<int> fired;
};

SectorShot run_sector(const DecodingGraph& g, double p, uint64_t seed, uint64_t shot,
                      uint64_t fault_salt, uint64_t gauge_salt) {
  SectorShot out;
  auto fe = make_engine(seed, shot, fault_salt);
  out.faults = sample_faults(g, p, fe);
  out.syndrome = syndrome_of(g, out.faults);
  out.correction = decode(g, out.syndrome);
  out.flip = crossing_parity(g, out.faults) ^ crossing_parity(g, out.correction);

  auto ge = make_engine(seed, shot, gauge_salt);
  std::vector<uint8_t> mem_mask = membership_mask(g.membrane, g.d2 * g.d2);
  for (size_t k = 0; k < g.gauge_stabs.size(); ++k) {
    uint8_t raw = static_cast<uint8_t>(ge() & 1);
    out.raws.push_back(raw);
    uint8_t inferred = 0;
    for (int e : g.gauge_infer_edges[k])
      inferred ^= std::binary_search(out.correction.begin(), out.correction.end(), e);
    if (raw ^ inferred) {
      // The fix string shares its Pauli type with the other-sector logical, so
      // that commutation is automatic; only the readout logical needs a check.
      if (overlap_parity(g.gauge_frames[k], mem_mask))
        throw std::logic_error("gauge fix string fails to commute with the readout");
      out.fired.push_back(int(k));
    }
  }
  return out;
}

}  // namespace

GrowthTrialRecord run_trial(const DecodingGraph& gx, const DecodingGraph& gz, double p,
                            uint64_t seed, uint64_t shot) {
  GrowthTrialRecord rec;
  SectorShot sx = run_sector(gx, p, seed, shot, kFaultSaltX, kGaugeSaltX);
  SectorShot sz = run_sector(gz, p, seed, shot, kFaultSaltZ, kGaugeSaltZ);
  rec.faults_x = std::move(sx.faults);
  rec.syndrome_x = std::move(sx.syndrome);
  rec.correction_x = std::move(sx.correction);
  rec.gauge_raw_x = std::move(sx.raws);
  rec.frame_fired_x = std::move(sx.fired);
  rec.faults_z = std::move(sz.faults);
  rec.syndrome_z = std::move(sz.syndrome);
  rec.correction_z = std::move(sz.correction);
  rec.gauge_raw_z = std::move(sz.raws);
  rec.frame_fired_z = std::move(sz.fired);
  rec.flip_z = sx.flip;  // Z residual detected by the X-stabilizer graph
  rec.flip_x = sz.flip;
  rec.logical = rec.flip_x ? (rec.flip_z ? 'Y' : 'X') : (rec.flip_z ? 'Z' : 'I');
  return rec;
}

std::string trial_to_json(const GrowthTrialRecord& rec) {
  nlohmann::json j;
  j["faults_x"] = rec.faults_x;
  j["faults_z"] = rec.faults_z;
  j["correction_x"] = rec.correction_x;
  j["correction_z"] = rec.correction_z;
  auto defects = [](const std::vector<uint8_t>& syn) {
    std::vector<int> d;
    for (size_t i = 0; i < syn.size(); ++i)
      if (syn[i]) d.push_back(int(i));
    return d;
  };
  j["syndrome_x"] = defects(rec.syndrome_x);
  j["syndrome_z"] = defects(rec.syndrome_z);
  j["logical"] = std::string(1, rec.logical);
  j["frame_fired_x"] = rec.frame_fired_x;
  j["frame_fired_z"] = rec.frame_fired_z;
  return j.dump();
}

}  // namespace qup
