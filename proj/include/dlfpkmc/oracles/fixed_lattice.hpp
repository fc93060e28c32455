// Global uniform-lattice SSA baseline: every molecule sits on a site of one
// fixed lattice spanning the whole world and hops to adjacent sites at rate
// D/h^2 per open direction (no jump off the ends; V = 0 only).  An A-B pair
// reacts the moment its site separation equals the channel's reaction
// radius, including immediately after initial placement or product drops.
// Pairs that start closer than the reaction separation react on first
// reaching it; site distance changes by one hop at a time, so they cannot
// cross it unnoticed.
//
// Used to cross-validate extinction statistics against the domain-based
// engine and to compare hop counts at matched parameters.
#ifndef DLFPKMC_ORACLES_FIXED_LATTICE_HPP
#define DLFPKMC_ORACLES_FIXED_LATTICE_HPP

#include <cstdint>
#include <vector>

#include "dlfpkmc/engine.hpp"
#include "dlfpkmc/model.hpp"

namespace fpkmc::lattice {

// Runs one realization of the lattice SSA.  The spacing must divide the
// world length and every bimolecular reaction radius; walls must be
// reflecting; all species potentials must be zero.  Initial positions and
// product locations are rounded to the nearest site.  hop_count counts
// executed hops; widths holds the single lattice spacing with that use
// count, so records are directly comparable with engine output.
RealizationRecord run_lattice_realization(
    const ReactionNetwork& net, const WorldSpec& world, double spacing,
    const std::vector<InitialPlacement>& initial, const StopRule& stop,
    const std::vector<double>& snapshot_times, std::uint64_t master_seed,
    std::uint64_t realization_index, bool measure_wall = false);

}  // namespace fpkmc::lattice

#endif  // DLFPKMC_ORACLES_FIXED_LATTICE_HPP
