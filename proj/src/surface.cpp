#include "qup/surface.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

#include "qup/f2.hpp"
#include "json.hpp"

namespace qup {

namespace {

void check_distance(int d, const char* name) {
  if (d < 3 || d > 25 || d % 2 == 0)
    throw std::invalid_argument(std::string(name) + " must be odd and in [3, 25]");
}

// Weight-2 faces survive only on the boundary matching their type: X checks
// on the top/bottom rows, Z checks on the left/right columns. This keeps
// every boundary check commuting with both logical strings.
bool keep_face(int d, int fi, int fj, bool z_type, int weight) {
  if (weight == 4) return true;
  if (weight != 2) return false;
  bool top_bottom = (fj == -1 || fj == d - 1);
  bool left_right = (fi == -1 || fi == d - 1);
  if (top_bottom && left_right) return false;  // corners never host a check
  if (top_bottom) return !z_type;
  if (left_right) return z_type;
  return false;
}

}  // namespace

CodePatch build_patch(int d) {
  check_distance(d, "code distance");
  CodePatch patch;
  patch.d = d;
  for (int fj = -1; fj < d; ++fj) {
    for (int fi = -1; fi < d; ++fi) {
      Stabilizer s;
      s.fi = fi;
      s.fj = fj;
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) {
          int x = fi + a, y = fj + b;
          if (x >= 0 && x < d && y >= 0 && y < d) s.sites.push_back(patch.site_index(x, y));
        }
      bool z_type = ((fi + fj) % 2 == 0);  // fi+fj is even or odd regardless of sign
      if (!keep_face(d, fi, fj, z_type, static_cast<int>(s.sites.size()))) continue;
      std::sort(s.sites.begin(), s.sites.end());
      (z_type ? patch.z_stabilizers : patch.x_stabilizers).push_back(std::move(s));
    }
  }
  for (int y = 0; y < d; ++y) patch.logical_x.push_back(patch.site_index(0, y));
  for (int x = 0; x < d; ++x) patch.logical_z.push_back(patch.site_index(x, 0));
  return patch;
}

GrowthLayout build_growth_layout(int d1, int d2, bool allow_small) {
  check_distance(d1, "initial distance");
  check_distance(d2, "target distance");
  if (d1 > d2) throw std::invalid_argument("initial distance exceeds target distance");
  if (d1 < 5) {
    if (!allow_small)
      throw std::invalid_argument("initial distance below 5 defeats the fault bound");
    std::cerr << "warning: initial distance " << d1
              << " is below the supported minimum of 5; results are demo-only\n";
  }
  GrowthLayout layout;
  layout.d1 = d1;
  layout.d2 = d2;
  layout.patch = build_patch(d2);
  layout.old_patch = build_patch(d1);
  for (int y = 0; y < d2; ++y)
    for (int x = 0; x < d2; ++x) {
      if (!layout.is_new_site(x, y)) continue;
      layout.init_basis[layout.patch.site_index(x, y)] =
          (y > x) ? InitBasis::Plus : InitBasis::Zero;
    }
  return layout;
}

int spacetime_distance(int x, int y, int t, int d1, int d2) {
  if (x < 0 || x >= d2 || y < 0 || y >= d2 || t < 0)
    throw std::invalid_argument("spacetime point outside the growth region");
  if (y <= d1) {
    if (x <= d1) return std::min(d1 + t, d2);
    return std::min(x + t, d2);
  }
  if (x > y) return std::min(x + t, d2);
  return std::min(y + t, d2);
}

namespace {

F2Vec remap_support(const std::vector<int>& sites, int d_from, int d_to) {
  F2Vec v(d_to * d_to);
  for (int s : sites) v.set((s / d_from) * d_to + (s % d_from));
  return v;
}

// Span of the t=0 stabilizer group restricted to one Pauli sector: the old
// patch checks of that sector plus single-site operators on every new site
// initialized in the matching basis.
F2Space init_sector_span(const GrowthLayout& layout, Sector sector) {
  int n = layout.d2 * layout.d2;
  F2Space span(n);
  const auto& old_checks = (sector == Sector::X) ? layout.old_patch.x_stabilizers
                                                 : layout.old_patch.z_stabilizers;
  for (const auto& s : old_checks) span.add(remap_support(s.sites, layout.d1, layout.d2));
  InitBasis want = (sector == Sector::X) ? InitBasis::Plus : InitBasis::Zero;
  for (const auto& [site, basis] : layout.init_basis) {
    if (basis != want) continue;
    F2Vec v(n);
    v.set(site);
    span.add(v);
  }
  return span;
}

}  // namespace

DeterministicInfo deterministic_initial_measurements(const GrowthLayout& layout) {
  DeterministicInfo info;
  int n = layout.d2 * layout.d2;
  for (Sector sector : {Sector::X, Sector::Z}) {
    F2Space span = init_sector_span(layout, sector);
    const auto& checks =
        (sector == Sector::X) ? layout.patch.x_stabilizers : layout.patch.z_stabilizers;
    auto& det = (sector == Sector::X) ? info.deterministic_x : info.deterministic_z;
    auto& gauge = (sector == Sector::X) ? info.gauge_x : info.gauge_z;
    for (size_t i = 0; i < checks.size(); ++i) {
      F2Vec v(n);
      for (int s : checks[i].sites) v.set(s);
      (span.contains(v) ? det : gauge).push_back(static_cast<int>(i));
    }
  }
  return info;
}

std::string layout_to_json(const GrowthLayout& layout) {
  nlohmann::json j;
  j["d1"] = layout.d1;
  j["d2"] = layout.d2;
  auto dump_patch = [](const CodePatch& p) {
    nlohmann::json pj;
    pj["d"] = p.d;
    auto dump_checks = [](const std::vector<Stabilizer>& checks) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : checks)
        arr.push_back({{"face", {s.fi, s.fj}}, {"sites", s.sites}});
      return arr;
    };
    pj["x_stabilizers"] = dump_checks(p.x_stabilizers);
    pj["z_stabilizers"] = dump_checks(p.z_stabilizers);
    pj["logical_x"] = p.logical_x;
    pj["logical_z"] = p.logical_z;
    return pj;
  };
  j["patch"] = dump_patch(layout.patch);
  j["old_patch"] = dump_patch(layout.old_patch);
  nlohmann::json init = nlohmann::json::array();
  std::vector<std::pair<int, InitBasis>> items(layout.init_basis.begin(),
                                               layout.init_basis.end());
  std::sort(items.begin(), items.end());
  for (const auto& [site, basis] : items)
    init.push_back({{"site", site}, {"basis", basis == InitBasis::Plus ? "+" : "0"}});
  j["init_basis"] = init;
  DeterministicInfo info = deterministic_initial_measurements(layout);
  j["deterministic_x"] = info.deterministic_x;
  j["gauge_x"] = info.gauge_x;
  j["deterministic_z"] = info.deterministic_z;
  j["gauge_z"] = info.gauge_z;
  return j.dump(2);
}

}  // namespace qup
