// Protective-domain management: pairing, limiting-neighbor search, domain
// sizing, and the live system state (molecules, domain slots, spatial
// indexes, event queue).
//
// Sizing keeps two invariants that the samplers rely on:
//   - domains of potential reaction partners never get closer than the
//     pair's reaction radius, so no reaction opportunity is missed while
//     both are protected;
//   - pair domains overlap nothing.
// Single domains of mutually inert molecules may overlap; point molecules
// of non-reacting species do not interact, so their walks are independent.
#ifndef DLFPKMC_DOMAINS_HPP
#define DLFPKMC_DOMAINS_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "dlfpkmc/mesh.hpp"
#include "dlfpkmc/model.hpp"
#include "dlfpkmc/path.hpp"
#include "dlfpkmc/rng.hpp"

namespace fpkmc {

struct Molecule {
  SpeciesId species = -1;
  double position = 0.0;  // valid at `time`
  double time = 0.0;      // individual clock
  bool alive = false;
  std::int32_t domain_slot = -1;
  std::int8_t occ_index = -1;  // 0 (left) or 1 (right) within the domain
};

enum class EventKind : std::uint8_t {
  FirstPassage,  // occupant reaches an absorbing domain endpoint
  Reaction,      // pair occupants reach the reaction separation
  Unimolecular,  // sampled exponential fires before any passage
  HopCap         // per-path hop budget exhausted; resync and rebuild
};

struct PendingEvent {
  EventKind kind = EventKind::FirstPassage;
  double time = 0.0;
  std::int8_t occupant = 0;    // exiting / transforming occupant
  std::int32_t channel = -1;   // unimolecular channel index
};

struct ProtectiveDomain {
  std::int64_t uid = -1;
  double a = 0.0, b = 0.0;  // interval, already truncated to the world
  double r_pd = 0.0;
  double creation_time = 0.0;
  int n_occ = 0;
  MoleculeId occ[2] = {-1, -1};  // occ[0] is the left occupant
  bool wall_exit_left = false;   // endpoint coincides with an absorbing wall
  bool wall_exit_right = false;
  bool mesh_valid = false;  // false: alignment hop exited immediately
  DomainMesh mesh;
  SamplePath path;
  PendingEvent pending;
};

struct QueueEntry {
  double time;
  std::uint64_t seq;  // tie-breaker: schedule order
  std::int32_t slot;
  std::int64_t uid;
  bool operator>(const QueueEntry& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct ReactionEvent {
  double time = 0.0;
  double location = 0.0;
};

struct SystemState {
  const ReactionNetwork* net = nullptr;
  WorldSpec world;
  KmcParams params;
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;

  double global_time = 0.0;
  std::vector<Molecule> molecules;  // indexed by MoleculeId; grows only
  std::vector<std::int64_t> alive_per_species;

  std::vector<ProtectiveDomain> domains;  // slot storage
  std::vector<std::int32_t> free_slots;
  std::set<std::pair<double, MoleculeId>> position_index;  // alive molecules
  // (interval start, uid) -> slot; with the length multiset this answers
  // interval stabbing queries in O(log n + hits).
  std::map<std::pair<double, std::int64_t>, std::int32_t> domain_index;
  std::multiset<double> domain_lengths;

  std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                      std::greater<QueueEntry>>
      queue;
  std::uint64_t domain_counter = 0;  // total ever created; seeds rng streams
  std::uint64_t event_seq = 0;
  std::uint64_t event_count = 0;

  RngStream realization_rng;  // placement and product ordering only
  WidthTally widths;
  // Hops the walks actually advanced through by dissolution time; sampled
  // futures discarded by a burst or resynchronization are excluded.
  std::uint64_t used_hops = 0;
  std::vector<ReactionEvent> reactions;
  std::uint64_t t0_reaction_count = 0;
  double last_reaction_time = std::numeric_limits<double>::quiet_NaN();

  MoleculeId add_molecule(SpeciesId s, double position, double time);
  void kill_molecule(MoleculeId m);
  void move_molecule(MoleculeId m, double position, double time);
  bool reactions_possible() const;

  // Slots of domains whose interval comes within `radius` of `pos`.
  std::vector<std::int32_t> domains_near(double pos, double radius) const;
};

// Mutually nearest reaction partners among the candidates (sorted by
// position) that satisfy the pairing distance conditions.  Candidates must
// be alive and domainless.
std::vector<std::pair<MoleculeId, MoleculeId>> select_pairs(
    const SystemState& st, const std::vector<MoleculeId>& candidates);

struct NeighborInfo {
  MoleculeId id = -1;
  double d_nbr = std::numeric_limits<double>::infinity();
  bool is_partner = false;   // neighbor is a potential reaction partner
  bool pd_defined = false;   // neighbor currently sits in a domain
  double d_nbr_pd = std::numeric_limits<double>::infinity();
  double partner_radius = 0.0;  // reaction radius when is_partner
};

// Limiting neighbor per the sizing rules: for a pair member, the nearest
// molecule of any type outside the pair; for a single, the nearest molecule
// that is a potential reaction partner or currently paired.  pair_partner
// is the other member when m is being sized as part of a pair.
NeighborInfo limiting_neighbor(const SystemState& st, MoleculeId m,
                               MoleculeId pair_partner = -1);

// The four-branch protection radius from the limiting-neighbor data.
double compute_rpd(const NeighborInfo& nbr);

// Removes a domain from every index and frees its occupants' slots.  The
// occupants keep their (stale) positions; callers synchronize them first.
void dissolve_domain(SystemState& st, std::int32_t slot);

// Builds domains (pairs first, then singles, left to right) for the given
// molecules, which must be alive, domainless, and synchronized to
// st.global_time.  Any immediate reactions (potential partners within their
// reaction radius) fire first, closest pair first, and their products are
// sized in the same call.  Every built domain gets a sampled path and a
// scheduled pending event.
void build_domains(SystemState& st, std::vector<MoleculeId> dirty);

}  // namespace fpkmc

#endif  // DLFPKMC_DOMAINS_HPP
