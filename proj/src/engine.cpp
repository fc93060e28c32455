#include "dlfpkmc/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace fpkmc {

namespace {

void validate_run(const ReactionNetwork& net, const WorldSpec& world,
                  const KmcParams& params) {
  if (!(world.length > 0.0))
    throw std::invalid_argument("world length must be > 0");
  if (!(params.h_s_max > 0.0))
    throw std::invalid_argument("h_s_max must be > 0");
  if (!net.bimolecular().empty()) {
    if (!(params.h_p > 0.0)) throw std::invalid_argument("h_p must be > 0");
    if (!(params.r_pair > net.max_reaction_radius()))
      throw std::invalid_argument(
          "r_pair must exceed every reaction radius");
    for (const auto& ch : net.bimolecular()) {
      const double k = ch.reaction_radius / params.h_p;
      if (std::fabs(k - std::lround(k)) > 1e-9 || std::lround(k) < 1)
        throw std::invalid_argument(
            "h_p must divide every reaction radius");
    }
  }
}

}  // namespace

std::vector<MoleculeId> place_products(SystemState& st,
                                       const std::vector<SpeciesId>& products,
                                       double location, double separation) {
  std::vector<MoleculeId> out;
  if (products.empty()) return out;
  const double L = st.world.length;
  const double margin = 1e-9 * L;
  const auto clamp = [&](double x) {
    return std::min(std::max(x, margin), L - margin);
  };
  if (products.size() == 1) {
    out.push_back(
        st.add_molecule(products[0], clamp(location), st.global_time));
    return out;
  }
  // Which product goes to which side is a fair coin from the realization
  // stream (consumed even for identical species, for reproducibility).
  const bool swapped = st.realization_rng.uniform01() <= 0.5;
  const SpeciesId s_lo = products[swapped ? 1 : 0];
  const SpeciesId s_hi = products[swapped ? 0 : 1];
  // A placement that pokes out of the world is shifted inward as a rigid
  // pair, preserving the separation (the geminate distance matters more
  // than the absolute location).
  double lo = location - 0.5 * separation;
  double hi = location + 0.5 * separation;
  if (lo < margin) {
    hi += margin - lo;
    lo = margin;
  }
  if (hi > L - margin) {
    lo -= hi - (L - margin);
    hi = L - margin;
  }
  lo = std::max(lo, margin);  // separation wider than the world itself
  out.push_back(st.add_molecule(s_lo, lo, st.global_time));
  out.push_back(st.add_molecule(s_hi, hi, st.global_time));
  return out;
}

double next_event_time(SystemState& st) {
  while (!st.queue.empty()) {
    const QueueEntry& e = st.queue.top();
    if (st.domains[e.slot].uid == e.uid) return e.time;
    st.queue.pop();
  }
  return std::numeric_limits<double>::infinity();
}

bool advance(SystemState& st) {
  QueueEntry e{};
  for (;;) {
    if (st.queue.empty()) return false;
    e = st.queue.top();
    st.queue.pop();
    if (st.domains[e.slot].uid == e.uid) break;
  }
  st.global_time = e.time;

  // Copy what the event handler needs; dissolving invalidates the slot.
  ProtectiveDomain& d = st.domains[e.slot];
  const PendingEvent ev = d.pending;
  const TerminalKind term_kind = d.path.terminal.kind;
  const int n_occ = d.n_occ;
  const MoleculeId occ[2] = {d.occ[0], d.occ[1]};
  const bool wall_l = d.wall_exit_left, wall_r = d.wall_exit_right;
  std::array<double, 2> pos;
  if (ev.kind == EventKind::Unimolecular)
    pos = no_passage_position(d.path, d.mesh, ev.time);
  else
    pos = d.path.terminal.position;
  dissolve_domain(st, e.slot);

  for (int k = 0; k < n_occ; ++k) st.move_molecule(occ[k], pos[k], e.time);

  std::vector<MoleculeId> dirty;
  switch (ev.kind) {
    case EventKind::FirstPassage: {
      const MoleculeId exiting = occ[ev.occupant];
      const bool through_wall =
          (term_kind == TerminalKind::ExitLeft && wall_l) ||
          (term_kind == TerminalKind::ExitRight && wall_r);
      for (int k = 0; k < n_occ; ++k)
        if (!(through_wall && occ[k] == exiting)) dirty.push_back(occ[k]);
      if (through_wall) st.kill_molecule(exiting);
      break;
    }
    case EventKind::Reaction: {
      const int c = st.net->bimolecular_channel(
          st.molecules[occ[0]].species, st.molecules[occ[1]].species);
      assert(c >= 0);
      const double location = 0.5 * (pos[0] + pos[1]);
      st.reactions.push_back({e.time, location});
      st.last_reaction_time = e.time;
      if (e.time == 0.0) ++st.t0_reaction_count;
      st.kill_molecule(occ[0]);
      st.kill_molecule(occ[1]);
      const auto& ch = st.net->bimolecular()[c];
      for (MoleculeId p :
           place_products(st, ch.products, location, ch.product_separation))
        dirty.push_back(p);
      break;
    }
    case EventKind::Unimolecular: {
      const MoleculeId reactant = occ[ev.occupant];
      const double location = pos[ev.occupant];
      st.reactions.push_back({e.time, location});
      st.last_reaction_time = e.time;
      if (e.time == 0.0) ++st.t0_reaction_count;
      st.kill_molecule(reactant);
      const auto& ch = st.net->unimolecular()[ev.channel];
      for (MoleculeId p :
           place_products(st, ch.products, location, ch.product_separation))
        dirty.push_back(p);
      for (int k = 0; k < n_occ; ++k)
        if (occ[k] != reactant) dirty.push_back(occ[k]);
      break;
    }
    case EventKind::HopCap: {
      for (int k = 0; k < n_occ; ++k) dirty.push_back(occ[k]);
      break;
    }
  }

  // Neighborhood synchronization: any domain within r_pair of an updated
  // position whose occupants include a reaction partner of that molecule is
  // brought to the event time and rebuilt along with the event's own
  // molecules (one level; no cascade).  Domains of mutually inert molecules
  // stand: they impose no clearance on the new domains and cannot pair, so
  // dissolving them would only discard their walks' sampled futures.
  std::vector<std::int32_t> affected;
  for (MoleculeId m : dirty) {
    const SpeciesId ms = st.molecules[m].species;
    for (std::int32_t s :
         st.domains_near(st.molecules[m].position, st.params.r_pair)) {
      const ProtectiveDomain& ad = st.domains[s];
      bool partner = false;
      for (int k = 0; k < ad.n_occ; ++k)
        partner = partner ||
                  st.net->bimolecular_channel(
                      ms, st.molecules[ad.occ[k]].species) >= 0;
      if (partner &&
          std::find(affected.begin(), affected.end(), s) == affected.end())
        affected.push_back(s);
    }
  }
  for (std::int32_t s : affected) {
    const ProtectiveDomain& ad = st.domains[s];
    const int an = ad.n_occ;
    const MoleculeId aocc[2] = {ad.occ[0], ad.occ[1]};
    const std::array<double, 2> apos =
        no_passage_position(ad.path, ad.mesh, e.time);
    dissolve_domain(st, s);
    for (int k = 0; k < an; ++k) {
      st.move_molecule(aocc[k], apos[k], e.time);
      dirty.push_back(aocc[k]);
    }
  }

  build_domains(st, std::move(dirty));
  ++st.event_count;
  return true;
}

std::vector<SnapshotRow> snapshot(const SystemState& st, double t) {
  std::vector<SnapshotRow> rows;
  for (MoleculeId m = 0; m < static_cast<MoleculeId>(st.molecules.size());
       ++m) {
    const Molecule& mol = st.molecules[m];
    if (!mol.alive) continue;
    assert(mol.domain_slot >= 0);
    const ProtectiveDomain& d = st.domains[mol.domain_slot];
    const std::array<double, 2> pos = no_passage_position(d.path, d.mesh, t);
    rows.push_back({t, m, mol.species, pos[mol.occ_index]});
  }
  return rows;
}

void synchronize_all(SystemState& st, double t) {
  std::vector<std::int32_t> slots;
  for (const auto& [key, slot] : st.domain_index) slots.push_back(slot);
  for (std::int32_t s : slots) {
    const ProtectiveDomain& d = st.domains[s];
    const int n = d.n_occ;
    const MoleculeId occ[2] = {d.occ[0], d.occ[1]};
    const std::array<double, 2> pos = no_passage_position(d.path, d.mesh, t);
    dissolve_domain(st, s);
    for (int k = 0; k < n; ++k) st.move_molecule(occ[k], pos[k], t);
  }
}

RealizationRecord run_realization(const ReactionNetwork& net,
                                  const WorldSpec& world,
                                  const KmcParams& params,
                                  const std::vector<InitialPlacement>& initial,
                                  const StopRule& stop,
                                  const std::vector<double>& snapshot_times,
                                  std::uint64_t master_seed,
                                  std::uint64_t realization_index,
                                  bool measure_wall) {
  validate_run(net, world, params);
  const auto t_start = std::chrono::steady_clock::now();

  SystemState st;
  st.net = &net;
  st.world = world;
  st.params = params;
  st.master_seed = master_seed;
  st.realization_index = realization_index;
  st.realization_rng =
      RngStream::for_realization(master_seed, realization_index);
  st.alive_per_species.assign(net.n_species(), 0);

  std::vector<MoleculeId> dirty;
  for (const auto& ip : initial) {
    if (ip.species < 0 || static_cast<std::size_t>(ip.species) >=
                              net.n_species())
      throw std::invalid_argument("initial placement of unknown species");
    if (!ip.positions.empty()) {
      for (double x : ip.positions) {
        if (!(x > 0.0 && x < world.length))
          throw std::invalid_argument("explicit position outside the world");
        dirty.push_back(st.add_molecule(ip.species, x, 0.0));
      }
    } else {
      double lo = ip.uniform_lo, hi = ip.uniform_hi;
      if (lo == 0.0 && hi == 0.0) hi = world.length;
      if (!(lo >= 0.0 && hi <= world.length && lo < hi))
        throw std::invalid_argument("uniform placement interval outside world");
      for (int c = 0; c < ip.count; ++c)
        dirty.push_back(
            st.add_molecule(ip.species, st.realization_rng.uniform(lo, hi), 0.0));
    }
  }

  RealizationRecord rec;
  rec.realization_index = realization_index;
  rec.initial_counts = st.alive_per_species;

  build_domains(st, std::move(dirty));  // fires t = 0 immediate reactions

  const double horizon = stop.kind == StopKind::TimeHorizon
                             ? stop.time_horizon
                             : std::numeric_limits<double>::infinity();
  std::size_t next_snap = 0;
  auto take_snapshots_up_to = [&](double t_max) {
    while (next_snap < snapshot_times.size() &&
           snapshot_times[next_snap] <= t_max) {
      for (const SnapshotRow& row : snapshot(st, snapshot_times[next_snap]))
        rec.snapshots.push_back(row);
      ++next_snap;
    }
  };

  if (!(stop.kind == StopKind::AllReacted && !st.reactions_possible())) {
    for (;;) {
      const double t_next = next_event_time(st);
      take_snapshots_up_to(std::min(t_next, horizon));
      if (stop.kind == StopKind::TimeHorizon && t_next > horizon) {
        st.global_time = horizon;
        synchronize_all(st, horizon);
        break;
      }
      if (!std::isfinite(t_next)) break;
      if (stop.kind == StopKind::EventCount &&
          st.event_count >= stop.max_events)
        break;
      advance(st);
      if (stop.kind == StopKind::AllReacted && !st.reactions_possible())
        break;
    }
  }

  // Settle surviving domains so their walks' progress up to the final time
  // is included in the hop count (their sampled futures are not).
  synchronize_all(st, st.global_time);

  rec.extinction_time = st.reactions_possible()
                            ? std::numeric_limits<double>::quiet_NaN()
                        : st.reactions.empty() ? 0.0
                                               : st.last_reaction_time;
  rec.t0_reaction_count = st.t0_reaction_count;
  rec.event_count = st.event_count;
  rec.reactions = std::move(st.reactions);
  rec.widths = std::move(st.widths);
  rec.hop_count = st.used_hops;
  if (measure_wall) {
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  }
  return rec;
}

}  // namespace fpkmc
