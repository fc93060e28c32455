// SSA sampling of continuous-time random walks on protective-domain meshes.
// A sampled path retains its full hop history so that positions at interior
// times can be replayed exactly (snapshots, partner synchronization, and
// unimolecular events all query mid-path positions).
#ifndef DLFPKMC_PATH_HPP
#define DLFPKMC_PATH_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "dlfpkmc/mesh.hpp"
#include "dlfpkmc/rng.hpp"

namespace fpkmc {

enum class TerminalKind : std::uint8_t {
  ExitLeft,   // first passage through the left domain endpoint
  ExitRight,  // first passage through the right domain endpoint
  Reaction,   // pair reached the reaction separation
  HopCap      // hop budget exhausted; walk paused mid-flight
};

struct PathTerminal {
  TerminalKind kind = TerminalKind::ExitLeft;
  std::uint8_t molecule = 0;  // which occupant exited (Exit* only)
  double time = 0.0;
  std::array<double, 2> position{};  // all occupants, at terminal time
};

struct PathHop {
  double time;
  std::int32_t node[2];  // mesh node per occupant after the hop
};

struct SamplePath {
  double start_time = 0.0;
  std::array<double, 2> initial_position{};
  int n_occupants = 1;
  std::vector<PathHop> hops;  // terminal transition excluded
  PathTerminal terminal;
};

// Histogram of mesh-edge widths crossed, accumulated over one realization.
// Entries are keyed by the exact width; near-duplicates from endpoint
// snapping merge when rounded for output.
class WidthTally {
 public:
  void add(double width, std::uint64_t uses);
  void merge(const WidthTally& other);
  const std::vector<std::pair<double, std::uint64_t>>& entries() const {
    return entries_;
  }
  std::uint64_t total_uses() const;

 private:
  std::vector<std::pair<double, std::uint64_t>> entries_;  // sorted by width
};

// Walks a lone occupant from its mesh node until first passage (or hop cap).
// Hop waiting times and direction choices consume rng in a fixed order, two
// draws per hop.  max_hops = 0 means unlimited.
SamplePath ssa_single_path(const DomainMesh& mesh, double start_time,
                           RngStream& rng, WidthTally& tally,
                           std::uint64_t max_hops);

struct PairPathResult {
  bool mesh_valid = false;  // false when the alignment hop already exited
  DomainMesh mesh;
  SamplePath path;
};

// Walks an unaligned pair: one alignment hop onto a common lattice (skipped
// when the separation is already a lattice multiple), then SSA on the pair
// mesh until reaction, first passage, or hop cap.  k_react is the reaction
// separation in lattice units (reaction_radius / h_p).
PairPathResult ssa_pair_path(double p_left, double p_right, double a, double b,
                             EndpointKind left, EndpointKind right, double h_p,
                             int k_react, const MeshOccupant& occ_left,
                             const MeshOccupant& occ_right, double start_time,
                             RngStream& rng, WidthTally& tally,
                             std::uint64_t max_hops);

// Exact position of every occupant at time t, start_time <= t <=
// terminal.time, by replaying the recorded hops (right-continuous in t; at
// terminal.time the terminal positions are returned).
std::array<double, 2> no_passage_position(const SamplePath& path,
                                          const DomainMesh& mesh, double t);

// Number of recorded hops the walk has taken by time t (hop times <= t).
// Hops sampled beyond t are futures a dissolving domain never realizes, so
// they do not count as performed work.
std::uint64_t consumed_hops(const SamplePath& path, double t);

}  // namespace fpkmc

#endif  // DLFPKMC_PATH_HPP
