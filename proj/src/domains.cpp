#include "dlfpkmc/domains.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "dlfpkmc/engine.hpp"

namespace fpkmc {

namespace {

double interval_distance(double p, double a, double b) {
  // Distance to the nearest interval endpoint (zero only if p is one).
  return std::min(std::fabs(p - a), std::fabs(p - b));
}

double gap_to_interval(double p, double a, double b) {
  // Signed-free gap: 0 when p is inside [a, b].
  if (p < a) return a - p;
  if (p > b) return p - b;
  return 0.0;
}

// Nearest living molecule of the same species as m; +inf when none.
double nearest_same_species_distance(const SystemState& st, MoleculeId m) {
  const Molecule& mol = st.molecules[m];
  const auto anchor = st.position_index.find({mol.position, m});
  assert(anchor != st.position_index.end());
  double best = std::numeric_limits<double>::infinity();
  for (auto it = anchor; it != st.position_index.begin();) {
    --it;
    if (st.molecules[it->second].species == mol.species) {
      best = mol.position - it->first;
      break;
    }
  }
  for (auto it = std::next(anchor); it != st.position_index.end(); ++it) {
    if (st.molecules[it->second].species == mol.species) {
      best = std::min(best, it->first - mol.position);
      break;
    }
  }
  return best;
}

}  // namespace

MoleculeId SystemState::add_molecule(SpeciesId s, double position,
                                     double time) {
  const MoleculeId id = static_cast<MoleculeId>(molecules.size());
  molecules.push_back({s, position, time, true, -1, -1});
  position_index.insert({position, id});
  ++alive_per_species[s];
  return id;
}

void SystemState::kill_molecule(MoleculeId m) {
  Molecule& mol = molecules[m];
  assert(mol.alive && mol.domain_slot < 0);
  position_index.erase({mol.position, m});
  mol.alive = false;
  --alive_per_species[mol.species];
}

void SystemState::move_molecule(MoleculeId m, double position, double time) {
  Molecule& mol = molecules[m];
  assert(mol.alive);
  if (position != mol.position) {
    position_index.erase({mol.position, m});
    position_index.insert({position, m});
    mol.position = position;
  }
  mol.time = time;
}

bool SystemState::reactions_possible() const {
  for (SpeciesId s = 0; s < static_cast<SpeciesId>(net->n_species()); ++s)
    if (alive_per_species[s] > 0 && !net->unimolecular_for(s).empty())
      return true;
  for (const auto& ch : net->bimolecular())
    if (alive_per_species[ch.reactant_a] > 0 &&
        alive_per_species[ch.reactant_b] > 0)
      return true;
  return false;
}

std::vector<std::int32_t> SystemState::domains_near(double pos,
                                                    double radius) const {
  std::vector<std::int32_t> out;
  if (domain_index.empty()) return out;
  const double l_max = domain_lengths.empty() ? 0.0 : *domain_lengths.rbegin();
  const double lo = pos - radius, hi = pos + radius;
  // Candidate starts lie in [lo - l_max, hi]; walk backward from hi.
  auto it = domain_index.upper_bound(
      {hi, std::numeric_limits<std::int64_t>::max()});
  while (it != domain_index.begin()) {
    --it;
    if (it->first.first < lo - l_max) break;
    if (domains[it->second].b >= lo) out.push_back(it->second);
  }
  return out;
}

std::vector<std::pair<MoleculeId, MoleculeId>> select_pairs(
    const SystemState& st, const std::vector<MoleculeId>& candidates) {
  const ReactionNetwork& net = *st.net;
  const int n = static_cast<int>(candidates.size());
  auto pos = [&](int i) { return st.molecules[candidates[i]].position; };
  auto spec = [&](int i) { return st.molecules[candidates[i]].species; };

  // Nearest potential reaction partner among the candidates; in sorted
  // order the first partner-species hit per direction is that side's
  // nearest.  Ties go to the left neighbor.
  std::vector<int> nearest(n, -1);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = i - 1; j >= 0; --j)
      if (net.bimolecular_channel(spec(i), spec(j)) >= 0) {
        best = j;
        best_d = pos(i) - pos(j);
        break;
      }
    for (int j = i + 1; j < n; ++j)
      if (net.bimolecular_channel(spec(i), spec(j)) >= 0) {
        if (pos(j) - pos(i) < best_d) best = j;
        break;
      }
    nearest[i] = best;
  }

  std::vector<std::pair<MoleculeId, MoleculeId>> pairs;
  std::vector<char> consumed(n, 0);
  for (int i = 0; i < n; ++i) {
    const int j = nearest[i];
    if (consumed[i] || j <= i || consumed[j] || nearest[j] != i) continue;
    const double d = pos(j) - pos(i);
    if (d > st.params.r_pair) continue;
    // Guard against starving a same-species molecule sitting just outside
    // the would-be pair: the partners must be closer to each other than the
    // reaction radius plus the tighter same-species crowding distance.
    const double crowd =
        std::min(nearest_same_species_distance(st, candidates[i]),
                 nearest_same_species_distance(st, candidates[j]));
    if (d > net.reaction_radius(spec(i), spec(j)) + crowd) continue;
    pairs.emplace_back(candidates[i], candidates[j]);
    consumed[i] = consumed[j] = 1;
  }
  return pairs;
}

NeighborInfo limiting_neighbor(const SystemState& st, MoleculeId m,
                               MoleculeId pair_partner) {
  const ReactionNetwork& net = *st.net;
  const Molecule& mol = st.molecules[m];
  const bool in_pair = pair_partner >= 0;

  auto qualifies = [&](MoleculeId q) {
    if (q == m || q == pair_partner) return false;
    if (in_pair) return true;  // next nearest of any type outside the pair
    const Molecule& qm = st.molecules[q];
    if (net.bimolecular_channel(mol.species, qm.species) >= 0) return true;
    // Currently paired molecules also limit singles.
    return qm.domain_slot >= 0 && st.domains[qm.domain_slot].n_occ == 2;
  };

  const auto anchor = st.position_index.find({mol.position, m});
  assert(anchor != st.position_index.end());
  NeighborInfo best;
  for (auto it = anchor; it != st.position_index.begin();) {
    --it;
    if (qualifies(it->second)) {
      best.id = it->second;
      best.d_nbr = mol.position - it->first;
      break;
    }
  }
  for (auto it = std::next(anchor); it != st.position_index.end(); ++it) {
    if (qualifies(it->second)) {
      if (it->first - mol.position < best.d_nbr) {
        best.id = it->second;
        best.d_nbr = it->first - mol.position;
      }
      break;
    }
  }
  if (best.id < 0) return best;

  const Molecule& nm = st.molecules[best.id];
  best.partner_radius = net.reaction_radius(mol.species, nm.species);
  // A pair domain must keep clearance from anything that reacts with either
  // member: the neighbor may be inert to the near member yet a partner of
  // the far one, and the far member's mesh reaches this edge of the domain.
  if (in_pair)
    best.partner_radius =
        std::max(best.partner_radius,
                 net.reaction_radius(st.molecules[pair_partner].species,
                                     nm.species));
  best.is_partner = best.partner_radius > 0.0;
  if (nm.domain_slot >= 0) {
    best.pd_defined = true;
    const ProtectiveDomain& d = st.domains[nm.domain_slot];
    best.d_nbr_pd = interval_distance(mol.position, d.a, d.b);
  }
  return best;
}

double compute_rpd(const NeighborInfo& nbr) {
  if (nbr.id < 0) return std::numeric_limits<double>::infinity();
  const bool partner = nbr.is_partner;       // Condition 1
  const bool undefined = !nbr.pd_defined;    // Condition 2
  if (partner && undefined) return 0.5 * (nbr.d_nbr - nbr.partner_radius);
  if (partner) return nbr.d_nbr_pd - nbr.partner_radius;
  if (undefined) return 0.5 * nbr.d_nbr;
  return nbr.d_nbr_pd;
}

void dissolve_domain(SystemState& st, std::int32_t slot) {
  ProtectiveDomain& d = st.domains[slot];
  st.used_hops += consumed_hops(d.path, st.global_time);
  st.domain_index.erase({d.a, d.uid});
  const auto len = st.domain_lengths.find(d.b - d.a);
  assert(len != st.domain_lengths.end());
  st.domain_lengths.erase(len);
  for (int k = 0; k < d.n_occ; ++k) {
    Molecule& mol = st.molecules[d.occ[k]];
    mol.domain_slot = -1;
    mol.occ_index = -1;
  }
  d.uid = -1;  // stale queue entries no longer match
  d.n_occ = 0;
  d.path = SamplePath{};
  d.mesh = DomainMesh{};
  st.free_slots.push_back(slot);
}

namespace {

std::int32_t alloc_slot(SystemState& st) {
  if (!st.free_slots.empty()) {
    const std::int32_t s = st.free_slots.back();
    st.free_slots.pop_back();
    return s;
  }
  st.domains.emplace_back();
  return static_cast<std::int32_t>(st.domains.size() - 1);
}

// Truncates [pos-r_lo, pos+r_hi] to the world and fills endpoint semantics.
struct TruncatedInterval {
  double a, b;
  EndpointKind left, right;
  bool wall_left, wall_right;
};

TruncatedInterval truncate_to_world(const SystemState& st, double lo,
                                    double hi) {
  TruncatedInterval t{lo, hi, EndpointKind::Absorbing, EndpointKind::Absorbing,
                      false, false};
  const double L = st.world.length;
  if (t.a < 0.0) {
    t.a = 0.0;
    if (st.world.left == WallKind::Reflecting)
      t.left = EndpointKind::ReflectingCell;
  }
  if (t.b > L) {
    t.b = L;
    if (st.world.right == WallKind::Reflecting)
      t.right = EndpointKind::ReflectingCell;
  }
  t.wall_left = t.a == 0.0 && st.world.left == WallKind::Absorbing;
  t.wall_right = t.b == L && st.world.right == WallKind::Absorbing;
  if (t.left == EndpointKind::ReflectingCell &&
      t.right == EndpointKind::ReflectingCell)
    throw std::logic_error("domain truncated to two reflecting endpoints");
  return t;
}

// Earliest of the path terminal and freshly drawn unimolecular candidates.
// Draw order is fixed (occupant 0's channels in declaration order, then
// occupant 1's) so a given rng stream always yields the same event.
PendingEvent make_pending(const SystemState& st, const ProtectiveDomain& d,
                          RngStream& rng) {
  PendingEvent ev;
  const PathTerminal& term = d.path.terminal;
  ev.time = term.time;
  ev.occupant = static_cast<std::int8_t>(term.molecule);
  switch (term.kind) {
    case TerminalKind::Reaction:
      ev.kind = EventKind::Reaction;
      break;
    case TerminalKind::HopCap:
      ev.kind = EventKind::HopCap;
      break;
    default:
      ev.kind = EventKind::FirstPassage;
  }
  for (int k = 0; k < d.n_occ; ++k) {
    const SpeciesId s = st.molecules[d.occ[k]].species;
    for (int ci : st.net->unimolecular_for(s)) {
      const double t = d.creation_time +
                       sample_exponential(st.net->unimolecular()[ci].rate, rng);
      if (t < ev.time) {
        ev.kind = EventKind::Unimolecular;
        ev.time = t;
        ev.occupant = static_cast<std::int8_t>(k);
        ev.channel = ci;
      }
    }
  }
  return ev;
}

void register_domain(SystemState& st, std::int32_t slot) {
  ProtectiveDomain& d = st.domains[slot];
  st.domain_index[{d.a, d.uid}] = slot;
  st.domain_lengths.insert(d.b - d.a);
  for (int k = 0; k < d.n_occ; ++k) {
    Molecule& mol = st.molecules[d.occ[k]];
    mol.domain_slot = slot;
    mol.occ_index = static_cast<std::int8_t>(k);
  }
  schedule(st, slot);
}

// Caps r so the new domain [lo(r), hi(r)] keeps the required clearances to
// existing domains: pair domains overlap nothing, and domains of potential
// reaction partners keep a reaction-radius gap so no encounter can be
// missed while both are protected.  Overlap among mutually inert singles is
// allowed.  Returns the capped radius (possibly <= 0 if an existing pair
// blocks the site entirely -- callers must check).
double clamp_against_existing(const SystemState& st, double r,
                              std::initializer_list<MoleculeId> members,
                              bool building_pair) {
  const ReactionNetwork& net = *st.net;
  std::vector<std::int32_t> slots;
  for (MoleculeId m : members)
    for (std::int32_t slot : st.domains_near(
             st.molecules[m].position, r + net.max_reaction_radius()))
      if (std::find(slots.begin(), slots.end(), slot) == slots.end())
        slots.push_back(slot);
  for (std::int32_t slot : slots) {
    const ProtectiveDomain& d = st.domains[slot];
    // The new interval extends r beyond its outermost member, so the
    // binding distance is the smallest member-to-interval gap; the required
    // clearance is the largest radius over (member, occupant) pairs, since
    // a walk of either domain reaches its own edge.
    double gap = std::numeric_limits<double>::infinity();
    double need = -1.0;  // required clearance; <0 means unconstrained
    if (building_pair || d.n_occ == 2) need = 0.0;
    for (MoleculeId m : members) {
      const Molecule& mol = st.molecules[m];
      gap = std::min(gap, gap_to_interval(mol.position, d.a, d.b));
      for (int k = 0; k < d.n_occ; ++k) {
        const double rr = net.reaction_radius(
            mol.species, st.molecules[d.occ[k]].species);
        if (rr > 0.0) need = std::max(need, rr);
      }
    }
    if (need >= 0.0) r = std::min(r, gap - need);
  }
  return r;
}

bool create_pair_domain(SystemState& st, MoleculeId ml, MoleculeId mr) {
  const ReactionNetwork& net = *st.net;
  const Molecule& a = st.molecules[ml];
  const Molecule& b = st.molecules[mr];
  const double pl = a.position, pr = b.position;
  const double sep = pr - pl;

  const NeighborInfo nl = limiting_neighbor(st, ml, mr);
  const NeighborInfo nr = limiting_neighbor(st, mr, ml);
  double r = std::min(compute_rpd(nl), compute_rpd(nr));
  if (st.params.pair_cap) r = std::min(r, 0.5 * sep);
  if (!std::isfinite(r))
    r = st.params.lone_cap_fraction *
        std::max(pl, st.world.length - pr);
  r = clamp_against_existing(st, r, {ml, mr}, true);
  // A domain lying between the members would overlap the pair for any r.
  for (std::int32_t slot : st.domains_near(0.5 * (pl + pr), 0.5 * sep)) {
    const ProtectiveDomain& d = st.domains[slot];
    if (d.b >= pl && d.a <= pr) return false;
  }
  if (!(r >= st.params.h_p)) return false;  // too tight; size as singles

  const TruncatedInterval t = truncate_to_world(st, pl - r, pr + r);
  const double r_react = net.reaction_radius(a.species, b.species);
  const int k_react = static_cast<int>(std::lround(r_react / st.params.h_p));

  const std::int32_t slot = alloc_slot(st);
  ProtectiveDomain& d = st.domains[slot];
  d.uid = static_cast<std::int64_t>(st.domain_counter++);
  d.a = t.a;
  d.b = t.b;
  d.r_pd = r;
  d.creation_time = st.global_time;
  d.n_occ = 2;
  d.occ[0] = ml;
  d.occ[1] = mr;
  d.wall_exit_left = t.wall_left;
  d.wall_exit_right = t.wall_right;

  RngStream rng = RngStream::for_domain(st.master_seed, st.realization_index,
                                        static_cast<std::uint64_t>(d.uid));
  const MeshOccupant ol{net.species(a.species).diffusion,
                        &net.species(a.species).potential};
  const MeshOccupant orr{net.species(b.species).diffusion,
                         &net.species(b.species).potential};
  PairPathResult res =
      ssa_pair_path(pl, pr, t.a, t.b, t.left, t.right, st.params.h_p, k_react,
                    ol, orr, st.global_time, rng, st.widths,
                    st.params.max_path_hops);
  d.mesh_valid = res.mesh_valid;
  d.mesh = std::move(res.mesh);
  d.path = std::move(res.path);
  d.pending = make_pending(st, d, rng);
  register_domain(st, slot);
  return true;
}

// Protection radii below this fraction of the world collapse to the
// molecule's own position in double precision (and would only buy walks of
// vanishing duration); treat them as "no room" so the caller bursts the
// blocking domain instead.
constexpr double kMinRadiusFraction = 1e-13;

// False when existing domains leave no usable protection radius; the
// caller bursts the blockers and retries.
bool create_single_domain(SystemState& st, MoleculeId m) {
  const ReactionNetwork& net = *st.net;
  const Molecule& mol = st.molecules[m];
  const double p = mol.position;
  const double L = st.world.length;

  double r = compute_rpd(limiting_neighbor(st, m));
  // Always cap against the walls: a domain swallowing both walls of a
  // reflecting world would have no absorbing endpoint to escape through.
  r = std::min(r, st.params.lone_cap_fraction * std::max(p, L - p));
  r = clamp_against_existing(st, r, {m}, false);
  if (!(r > kMinRadiusFraction * L)) return false;

  const TruncatedInterval t = truncate_to_world(st, p - r, p + r);
  const std::int32_t slot = alloc_slot(st);
  ProtectiveDomain& d = st.domains[slot];
  d.uid = static_cast<std::int64_t>(st.domain_counter++);
  d.a = t.a;
  d.b = t.b;
  d.r_pd = r;
  d.creation_time = st.global_time;
  d.n_occ = 1;
  d.occ[0] = m;
  d.occ[1] = -1;
  d.wall_exit_left = t.wall_left;
  d.wall_exit_right = t.wall_right;

  RngStream rng = RngStream::for_domain(st.master_seed, st.realization_index,
                                        static_cast<std::uint64_t>(d.uid));
  const MeshOccupant occ{net.species(mol.species).diffusion,
                         &net.species(mol.species).potential};
  d.mesh = single_mesh(p, t.a, t.b, t.left, t.right, st.params.h_s_max, occ);
  d.mesh_valid = true;
  d.path = ssa_single_path(d.mesh, st.global_time, rng, st.widths,
                           st.params.max_path_hops);
  d.pending = make_pending(st, d, rng);
  register_domain(st, slot);
  return true;
}

// Fires every immediate reaction among the candidates (potential partners
// already within their reaction radius), closest pair first; products join
// the candidate set.  Occurs at t = 0 for overlapping initial placements
// and whenever products land next to a reactive neighbor.
// Separations are only meaningful to the lattice snap tolerance (the pair
// alignment submesh rounds separations within one part in 1e9 onto the
// lattice), so contact checks allow the same relative slack; otherwise a
// molecule wedged at radius-plus-epsilon from a partner would demand a
// protective domain of width epsilon.
constexpr double kContactSlack = 1.0 + 1e-9;

// Contact distance for a channel: anything the pair lattice would place on
// or below the absorbing separation is already a reaction.  A pair mesh
// snaps separations within kLatticeSnapTol*h_p*(k+1) onto lattice rank k,
// so separations that would snap onto the reaction rank must fire here --
// a pair domain cannot start on its absorbing boundary, and a protective
// single of the leftover sliver would be narrower than double precision
// resolves.
double contact_distance(double reaction_radius, double h_p) {
  const double k = std::round(reaction_radius / h_p);
  const double snapped = k * h_p + kLatticeSnapTol * h_p * (k + 1.0);
  return std::max(reaction_radius * kContactSlack, snapped);
}

void immediate_reactions(SystemState& st, std::vector<MoleculeId>& dirty) {
  const ReactionNetwork& net = *st.net;
  double window = 0.0;
  for (const auto& ch : net.bimolecular())
    window = std::max(window,
                      contact_distance(ch.reaction_radius, st.params.h_p));
  for (int round = 0; round < 1024; ++round) {
    std::vector<std::pair<double, MoleculeId>> cand;
    for (MoleculeId m : dirty)
      if (st.molecules[m].alive && st.molecules[m].domain_slot < 0)
        cand.push_back({st.molecules[m].position, m});
    std::sort(cand.begin(), cand.end());

    int bi = -1, bj = -1, channel = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cand.size(); ++i) {
      for (std::size_t j = i + 1; j < cand.size(); ++j) {
        const double dist = cand[j].first - cand[i].first;
        if (dist > window) break;
        const int c = net.bimolecular_channel(
            st.molecules[cand[i].second].species,
            st.molecules[cand[j].second].species);
        if (c >= 0 &&
            dist <= contact_distance(net.bimolecular()[c].reaction_radius,
                                     st.params.h_p) &&
            dist < best_d) {
          best_d = dist;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
          channel = c;
        }
      }
    }
    if (channel < 0) return;

    const MoleculeId m1 = cand[bi].second, m2 = cand[bj].second;
    const double location =
        0.5 * (st.molecules[m1].position + st.molecules[m2].position);
    st.reactions.push_back({st.global_time, location});
    st.last_reaction_time = st.global_time;
    if (st.global_time == 0.0) ++st.t0_reaction_count;
    st.kill_molecule(m1);
    st.kill_molecule(m2);
    const auto& ch = net.bimolecular()[channel];
    for (MoleculeId p :
         place_products(st, ch.products, location, ch.product_separation))
      dirty.push_back(p);
  }
  throw std::logic_error("immediate reaction cascade did not terminate");
}

}  // namespace

void build_domains(SystemState& st, std::vector<MoleculeId> dirty) {
  // Rounds: react contacts, pair what pairs, size the rest as singles.  A
  // single that cannot keep the required clearance from a standing domain
  // bursts it (no-passage synchronization to now) and the freed occupants
  // join the next round, where pairing can absorb near-contact separations.
  // Each burst dissolves at least one domain and rebuilt ones keep their
  // clearances, so rounds terminate; the cap turns a logic error into a
  // loud failure instead of a hang.
  for (int round = 0; round < 1024; ++round) {
    immediate_reactions(st, dirty);

    std::vector<std::pair<double, MoleculeId>> by_pos;
    for (MoleculeId m : dirty) {
      const Molecule& mol = st.molecules[m];
      if (!mol.alive || mol.domain_slot >= 0) continue;
      assert(mol.time == st.global_time);
      by_pos.push_back({mol.position, m});
    }
    std::sort(by_pos.begin(), by_pos.end());
    std::vector<MoleculeId> cands;
    cands.reserve(by_pos.size());
    for (const auto& [p, m] : by_pos) cands.push_back(m);

    // Pairs first (left to right), then remaining singles left to right; a
    // pair that cannot claim at least h_p of protection falls back to two
    // singles.
    for (const auto& [ml, mr] : select_pairs(st, cands))
      create_pair_domain(st, ml, mr);
    std::vector<MoleculeId> blocked;
    for (MoleculeId m : cands) {
      if (!st.molecules[m].alive || st.molecules[m].domain_slot >= 0)
        continue;
      if (create_single_domain(st, m)) continue;
      blocked.push_back(m);
      // The binding clearance is at most a reaction radius, so any domain
      // that pinched the radius below the floor lies within r_pair (which
      // the engine validates to exceed every reaction radius).
      for (std::int32_t slot :
           st.domains_near(st.molecules[m].position, st.params.r_pair)) {
        const ProtectiveDomain& d = st.domains[slot];
        const int n_occ = d.n_occ;
        const MoleculeId occ[2] = {d.occ[0], d.occ[1]};
        const std::array<double, 2> pos =
            no_passage_position(d.path, d.mesh, st.global_time);
        dissolve_domain(st, slot);
        for (int k = 0; k < n_occ; ++k) {
          st.move_molecule(occ[k], pos[k], st.global_time);
          blocked.push_back(occ[k]);
        }
      }
    }
    if (blocked.empty()) return;
    dirty = std::move(blocked);
  }
  {
    std::string msg = "domain building did not stabilize t=" +
                      std::to_string(st.global_time);
    for (MoleculeId m : dirty) {
      const Molecule& mol = st.molecules[m];
      char buf[160];
      std::snprintf(buf, sizeof buf, " | m=%d sp=%d pos=%.17g slot=%d", m,
                    mol.species, mol.position, mol.domain_slot);
      msg += buf;
      for (std::int32_t s : st.domains_near(mol.position, st.params.r_pair)) {
        const ProtectiveDomain& d = st.domains[s];
        std::snprintf(buf, sizeof buf, " {dom slot=%d n=%d a=%.17g b=%.17g}",
                      s, d.n_occ, d.a, d.b);
        msg += buf;
      }
    }
    throw std::logic_error(msg);
  }
}

}  // namespace fpkmc
