// Event loop: one pending event per protective domain, processed in time
// order from a priority queue with lazy invalidation (dissolved domains
// leave stale entries behind; a uid mismatch skips them).
#ifndef DLFPKMC_ENGINE_HPP
#define DLFPKMC_ENGINE_HPP

#include <cstdint>
#include <vector>

#include "dlfpkmc/domains.hpp"

namespace fpkmc {

inline void schedule(SystemState& st, std::int32_t slot) {
  const ProtectiveDomain& d = st.domains[slot];
  st.queue.push({d.pending.time, st.event_seq++, slot, d.uid});
}

// Creates product molecules of a fired reaction channel: one product at the
// reaction location, two at location +/- separation/2 with the side order
// randomized (realization stream), all clamped strictly inside the world.
std::vector<MoleculeId> place_products(SystemState& st,
                                       const std::vector<SpeciesId>& products,
                                       double location, double separation);

// Time of the next valid event; +inf when none remain.  Prunes stale queue
// entries as a side effect.
double next_event_time(SystemState& st);

// Processes the next valid event: advances global time, realizes the event,
// synchronizes every domain overlapping or within r_pair of an updated
// position, and rebuilds domains for all affected molecules.  Returns false
// when no valid event remained.
bool advance(SystemState& st);

// Positions of all living molecules at time t, which must be covered by
// every live path (guaranteed between events for t up to the next event
// time).  Non-destructive.
struct SnapshotRow {
  double time = 0.0;
  MoleculeId molecule = -1;
  SpeciesId species = -1;
  double position = 0.0;
};
std::vector<SnapshotRow> snapshot(const SystemState& st, double t);

// No-passage-synchronizes every occupant to time t and dissolves all
// domains; used to finalize a time-horizon run.
void synchronize_all(SystemState& st, double t);

struct RealizationRecord {
  std::uint64_t realization_index = 0;
  std::vector<std::int64_t> initial_counts;  // per species, after placement
  // Time of the reaction that exhausted all reaction possibilities; NaN if
  // the run stopped while reactions were still possible (or never happened).
  double extinction_time = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t t0_reaction_count = 0;
  std::uint64_t hop_count = 0;
  std::uint64_t event_count = 0;
  double wall_seconds = 0.0;
  std::vector<ReactionEvent> reactions;
  std::vector<SnapshotRow> snapshots;
  WidthTally widths;
};

// Runs one complete realization.  Placement draws, t = 0 immediate
// reactions, the event loop, and the stop rule all live here.  wall timing
// is only measured when measure_wall is set, keeping outputs byte-stable
// across hosts otherwise.
RealizationRecord run_realization(const ReactionNetwork& net,
                                  const WorldSpec& world,
                                  const KmcParams& params,
                                  const std::vector<InitialPlacement>& initial,
                                  const StopRule& stop,
                                  const std::vector<double>& snapshot_times,
                                  std::uint64_t master_seed,
                                  std::uint64_t realization_index,
                                  bool measure_wall = false);

}  // namespace fpkmc

#endif  // DLFPKMC_ENGINE_HPP
