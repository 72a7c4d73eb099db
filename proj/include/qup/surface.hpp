#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace qup {

enum class Sector { X, Z };
enum class InitBasis { Zero, Plus };

// One plaquette check: face coordinates (fi, fj) index the dual cell whose
// corners are data sites (fi+a, fj+b), a,b in {0,1}, clipped to the lattice.
struct Stabilizer {
  int fi = 0;
  int fj = 0;
  std::vector<int> sites;
};

// Rotated [[d^2, 1, d]] patch. Data site (x, y) has index y*d + x. X-type
// boundaries run along the top and bottom rows (logical X is the x = 0
// column), Z-type boundaries along the left and right (logical Z is the
// y = 0 row).
struct CodePatch {
  int d = 0;
  std::vector<Stabilizer> x_stabilizers;
  std::vector<Stabilizer> z_stabilizers;
  std::vector<int> logical_x;
  std::vector<int> logical_z;

  int site_index(int x, int y) const { return y * d + x; }
};

CodePatch build_patch(int d);

// Growth layout: old SC(d1) patch in the corner 0 <= x,y < d1 of the SC(d2)
// lattice; new sites initialized in |+> when y > x and |0> otherwise.
struct GrowthLayout {
  int d1 = 0;
  int d2 = 0;
  CodePatch patch;      // SC(d2)
  CodePatch old_patch;  // SC(d1)
  std::unordered_map<int, InitBasis> init_basis;  // keyed by SC(d2) site index

  bool is_new_site(int x, int y) const { return x >= d1 || y >= d1; }
};

GrowthLayout build_growth_layout(int d1, int d2, bool allow_small = false);

// Minimum length of a logical-capable error string through (x, y, t).
int spacetime_distance(int x, int y, int t, int d1, int d2);

// Partition of the t=0 measurements into deterministic and gauge checks,
// decided by F2 membership in the span of the initialization stabilizers.
struct DeterministicInfo {
  std::vector<int> deterministic_x, gauge_x;  // indices into patch.x_stabilizers
  std::vector<int> deterministic_z, gauge_z;  // indices into patch.z_stabilizers
};

DeterministicInfo deterministic_initial_measurements(const GrowthLayout& layout);

std::string layout_to_json(const GrowthLayout& layout);

}  // namespace qup
