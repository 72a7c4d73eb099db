#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qup/surface.hpp"

namespace qup {

enum class FaultKind { Data, Measurement, Init };

// One independent fault location. Detector endpoints a/b are -1 when the
// fault is detected only once (spatial or gauge boundary).
struct FaultEdge {
  int a = -1;
  int b = -1;
  FaultKind kind = FaultKind::Data;
  int site = -1;  // data/init faults: data site; measurement faults: stabilizer
  int round = 0;
  bool crosses_logical = false;
};

// Detector graph of one stabilizer sector over T measurement rounds
// t = 0..T-1 (the last round is noiseless and closes the time boundary).
// Detectors: deterministic t=0 checks, then per-stabilizer round-to-round
// comparisons for t = 1..T-1; gauge checks contribute no t=0 detector.
struct DecodingGraph {
  Sector sector = Sector::Z;
  int d1 = 0, d2 = 0, T = 0;
  int num_stabs = 0;
  int t0_count = 0;
  int num_detectors = 0;
  std::vector<FaultEdge> edges;
  std::vector<int> t0_detector;  // per stabilizer: t=0 detector id, or -1 (gauge)

  std::vector<int> gauge_stabs;  // stabilizer indices without a t=0 detector
  std::vector<std::vector<int>> gauge_infer_edges;  // edges flipping that t=0 record
  std::vector<std::vector<int>> gauge_frames;       // dual-type fix string supports

  std::vector<int> membrane;       // logical support this sector's faults can flip
  std::vector<int> other_logical;  // the complementary logical (frame checks)

  std::vector<std::vector<std::pair<int, int>>> adj;  // detector -> (detector, edge)
  std::vector<int> boundary_dist;    // hop distance to the boundary, -1 unreachable
  std::vector<int> boundary_edge;    // first edge on a shortest boundary path
  std::vector<int> boundary_prev;    // next detector toward the boundary, -1 at end

  int comparison_id(int stab, int t) const {
    return t0_count + (t - 1) * num_stabs + stab;
  }
};

DecodingGraph build_decoding_graph(const GrowthLayout& layout, int T, Sector sector);

// Each edge fires independently with probability p; returns sorted edge ids.
std::vector<int> sample_faults(const DecodingGraph& g, double p, std::mt19937_64& rng);

std::vector<uint8_t> syndrome_of(const DecodingGraph& g, const std::vector<int>& fault_edges);

// Exact minimum-weight matching decode; returns a sorted edge set whose
// detector boundary equals the syndrome.
std::vector<int> decode(const DecodingGraph& g, const std::vector<uint8_t>& syndrome);

bool crossing_parity(const DecodingGraph& g, const std::vector<int>& edge_ids);

struct GrowthTrialRecord {
  std::vector<int> faults_x, faults_z;  // edges of the X- and Z-stabilizer graphs
  std::vector<uint8_t> syndrome_x, syndrome_z;
  std::vector<int> correction_x, correction_z;
  bool flip_x = false;  // X residual component (flips the Z readout; Z-stab graph)
  bool flip_z = false;  // Z residual component (X-stab graph)
  char logical = 'I';   // 'I', 'X', 'Z' or 'Y'
  std::vector<uint8_t> gauge_raw_x, gauge_raw_z;  // raw t=0 outcomes per gauge check
  std::vector<int> frame_fired_x, frame_fired_z;  // gauge list indices with m-hat = 1
};

// Per-sector stream salts: each sector's faults and gauge outcomes are a
// function of (seed, shot, salt) only, so the sectors stay independent.
inline constexpr uint64_t kFaultSaltX = 0xD158;
inline constexpr uint64_t kFaultSaltZ = 0xD15A;
inline constexpr uint64_t kGaugeSaltX = 0x6A58;
inline constexpr uint64_t kGaugeSaltZ = 0x6A5A;

GrowthTrialRecord run_trial(const DecodingGraph& gx, const DecodingGraph& gz, double p,
                            uint64_t seed, uint64_t shot);

std::string trial_to_json(const GrowthTrialRecord& rec);

}  // namespace qup
