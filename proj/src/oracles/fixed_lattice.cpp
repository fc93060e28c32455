#include "dlfpkmc/oracles/fixed_lattice.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dlfpkmc/rng.hpp"

namespace fpkmc::lattice {

namespace {

struct SiteMolecule {
  MoleculeId id = -1;
  SpeciesId species = -1;
  std::int64_t site = 0;
};

struct LatticeState {
  const ReactionNetwork* net = nullptr;
  double h = 0.0;
  std::int64_t n_sites = 0;  // sites run 0..n_sites inclusive
  double time = 0.0;

  std::vector<SiteMolecule> alive;  // compact; order changes on removal
  std::vector<std::int64_t> alive_per_species;
  std::vector<int> pair_units;      // per bimolecular channel: radius / h
  std::vector<double> uni_rate_sum;  // per species
  std::vector<ReactionEvent> reactions;
  double last_reaction_time = 0.0;
  std::uint64_t t0_reaction_count = 0;
  std::uint64_t hop_count = 0;
  std::uint64_t event_count = 0;
  MoleculeId next_id = 0;

  bool reactions_possible() const {
    for (SpeciesId s = 0; s < static_cast<SpeciesId>(net->n_species()); ++s)
      if (alive_per_species[s] > 0 && !net->unimolecular_for(s).empty())
        return true;
    for (const auto& ch : net->bimolecular())
      if (alive_per_species[ch.reactant_a] > 0 &&
          alive_per_species[ch.reactant_b] > 0)
        return true;
    return false;
  }

  void add(SpeciesId sp, std::int64_t site) {
    alive.push_back({next_id++, sp, site});
    ++alive_per_species[sp];
  }

  void remove(std::size_t index) {
    --alive_per_species[alive[index].species];
    alive[index] = alive.back();
    alive.pop_back();
  }

  std::int64_t round_site(double x) const {
    const auto k = std::llround(x / h);
    return std::clamp<std::int64_t>(k, 0, n_sites);
  }
};

std::int64_t exact_units(double whole, double part, const char* what) {
  const double q = whole / part;
  const auto k = std::llround(q);
  if (k < 1 || std::abs(q - static_cast<double>(k)) > 1e-9 * q)
    throw std::invalid_argument(std::string("lattice spacing must divide ") +
                                what);
  return k;
}

// Fires every reaction the spacing treats as touching (site separation equal
// to the channel's separation in lattice units), scanning in molecule-id
// order for reproducibility.  Product drops can re-trigger, hence the loop.
void resolve_contacts(LatticeState& st, RngStream& rng);

void place_products(LatticeState& st, const std::vector<SpeciesId>& products,
                    double location, double separation, RngStream& rng) {
  if (products.empty()) return;
  if (products.size() == 1) {
    st.add(products[0], st.round_site(location));
    return;
  }
  const bool swapped = rng.uniform01() <= 0.5;
  std::int64_t lo = st.round_site(location - 0.5 * separation);
  std::int64_t hi = st.round_site(location + 0.5 * separation);
  const std::int64_t units =
      std::min<std::int64_t>(std::llround(separation / st.h), st.n_sites);
  // Rounding can squeeze the pair; restore the separation inside the world.
  if (hi - lo != units) hi = std::min(lo + units, st.n_sites);
  if (hi - lo != units) lo = hi - units;
  st.add(products[swapped ? 1 : 0], lo);
  st.add(products[swapped ? 0 : 1], hi);
}

void resolve_contacts(LatticeState& st, RngStream& rng) {
  // Initial contacts fire for any separation within the reaction radius;
  // later drops only at the exact separation (closer pairs react when the
  // walk first brings them to it).
  const bool initial = st.time == 0.0;
  for (int round = 0; round < 1024; ++round) {
    bool fired = false;
    for (std::size_t i = 0; i < st.alive.size() && !fired; ++i) {
      for (std::size_t j = i + 1; j < st.alive.size(); ++j) {
        const auto& a = st.alive[i];
        const auto& b = st.alive[j];
        const int c = st.net->bimolecular_channel(a.species, b.species);
        if (c < 0) continue;
        const auto d = std::abs(a.site - b.site);
        if (initial ? d > st.pair_units[c] : d != st.pair_units[c]) continue;
        const auto& ch = st.net->bimolecular()[c];
        const double loc = 0.5 * (a.site + b.site) * st.h;
        st.reactions.push_back({st.time, loc});
        st.last_reaction_time = st.time;
        if (st.time == 0.0) ++st.t0_reaction_count;
        st.remove(j);  // j > i, so i stays valid
        st.remove(i);
        place_products(st, ch.products, loc, ch.product_separation, rng);
        fired = true;
        break;
      }
    }
    if (!fired) return;
  }
  throw std::runtime_error("reaction cascade exceeded 1024 rounds");
}

// Reaction check after molecule `index` hopped: only its pairings changed.
// If several partners sit at exactly the reaction separation, the scan
// fires the first by list order; ties are a lattice artifact with no
// continuum counterpart, so any fixed rule serves.
void react_after_hop(LatticeState& st, std::size_t index, RngStream& rng) {
  const auto mover = st.alive[index];
  for (std::size_t j = 0; j < st.alive.size(); ++j) {
    if (j == index) continue;
    const auto& other = st.alive[j];
    const int c = st.net->bimolecular_channel(mover.species, other.species);
    if (c < 0 || std::abs(mover.site - other.site) != st.pair_units[c])
      continue;
    const auto& ch = st.net->bimolecular()[c];
    const double loc = 0.5 * (mover.site + other.site) * st.h;
    st.reactions.push_back({st.time, loc});
    st.last_reaction_time = st.time;
    st.remove(std::max(index, j));
    st.remove(std::min(index, j));
    place_products(st, ch.products, loc, ch.product_separation, rng);
    resolve_contacts(st, rng);
    return;
  }
}

}  // namespace

RealizationRecord run_lattice_realization(
    const ReactionNetwork& net, const WorldSpec& world, double spacing,
    const std::vector<InitialPlacement>& initial, const StopRule& stop,
    const std::vector<double>& snapshot_times, std::uint64_t master_seed,
    std::uint64_t realization_index, bool measure_wall) {
  if (!(world.length > 0.0))
    throw std::invalid_argument("world length must be positive");
  if (world.left != WallKind::Reflecting || world.right != WallKind::Reflecting)
    throw std::invalid_argument("lattice baseline supports reflecting walls only");
  if (!(spacing > 0.0))
    throw std::invalid_argument("lattice spacing must be positive");
  for (const auto& sp : net.species())
    if (!sp.potential.is_zero())
      throw std::invalid_argument("lattice baseline supports V = 0 only");

  const auto t_start = std::chrono::steady_clock::now();

  LatticeState st;
  st.net = &net;
  st.h = spacing;
  st.n_sites = exact_units(world.length, spacing, "the world length");
  st.alive_per_species.assign(net.n_species(), 0);
  for (const auto& ch : net.bimolecular())
    st.pair_units.push_back(static_cast<int>(
        exact_units(ch.reaction_radius, spacing, "every reaction radius")));
  st.uni_rate_sum.assign(net.n_species(), 0.0);
  for (const auto& ch : net.unimolecular())
    st.uni_rate_sum[ch.reactant] += ch.rate;

  RngStream rng = RngStream::for_realization(master_seed, realization_index);

  RealizationRecord rec;
  rec.realization_index = realization_index;
  for (const auto& pl : initial) {
    if (pl.species < 0 ||
        static_cast<std::size_t>(pl.species) >= net.n_species())
      throw std::invalid_argument("initial placement names unknown species");
    if (!pl.positions.empty()) {
      for (double x : pl.positions) {
        if (!(x > 0.0) || !(x < world.length))
          throw std::invalid_argument(
              "explicit initial positions must lie strictly inside the world");
        st.add(pl.species, st.round_site(x));
      }
    } else {
      double lo = pl.uniform_lo, hi = pl.uniform_hi;
      if (lo == 0.0 && hi == 0.0) hi = world.length;
      if (!(lo >= 0.0 && hi <= world.length && lo < hi))
        throw std::invalid_argument("uniform placement interval outside world");
      for (int k = 0; k < pl.count; ++k)
        st.add(pl.species, st.round_site(lo + (hi - lo) * rng.uniform01()));
    }
  }
  rec.initial_counts.assign(net.n_species(), 0);
  for (SpeciesId s = 0; s < static_cast<SpeciesId>(net.n_species()); ++s)
    rec.initial_counts[s] = st.alive_per_species[s];

  resolve_contacts(st, rng);

  const double horizon = stop.time_horizon;
  std::size_t next_snapshot = 0;
  const auto take_snapshots_up_to = [&](double t) {
    while (next_snapshot < snapshot_times.size() &&
           snapshot_times[next_snapshot] <= t) {
      const double ts = snapshot_times[next_snapshot++];
      for (const auto& mol : st.alive)
        rec.snapshots.push_back({ts, mol.id, mol.species, mol.site * st.h});
    }
  };

  std::vector<double> cum;  // per-alive-molecule cumulative propensity
  const auto step = [&]() -> bool {  // false: no channel can ever fire
    cum.resize(st.alive.size());
    double total = 0.0;
    for (std::size_t i = 0; i < st.alive.size(); ++i) {
      const auto& mol = st.alive[i];
      const double hop = net.species(mol.species).diffusion / (st.h * st.h);
      if (mol.site > 0) total += hop;
      if (mol.site < st.n_sites) total += hop;
      total += st.uni_rate_sum[mol.species];
      cum[i] = total;
    }
    if (!(total > 0.0)) return false;

    const double t_next = st.time + sample_exponential(total, rng);
    take_snapshots_up_to(std::min(t_next, horizon));
    if (stop.kind == StopKind::TimeHorizon && t_next > horizon) {
      st.time = horizon;
      return false;
    }
    st.time = t_next;

    const double target = rng.uniform01() * total;
    const std::size_t i = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
    const std::size_t index = std::min(i, st.alive.size() - 1);
    auto& mol = st.alive[index];
    const double hop = net.species(mol.species).diffusion / (st.h * st.h);
    double within = target - (index > 0 ? cum[index - 1] : 0.0);
    ++st.event_count;

    if (mol.site > 0) {
      within -= hop;
      if (within <= 0.0) {
        --mol.site;
        ++st.hop_count;
        react_after_hop(st, index, rng);
        return true;
      }
    }
    if (mol.site < st.n_sites) {
      within -= hop;
      if (within <= 0.0) {
        ++mol.site;
        ++st.hop_count;
        react_after_hop(st, index, rng);
        return true;
      }
    }
    // Unimolecular channels of this species, declaration order.
    const auto& channels = net.unimolecular_for(mol.species);
    for (std::size_t k = 0; k < channels.size(); ++k) {
      const auto& ch = net.unimolecular()[channels[k]];
      within -= ch.rate;
      if (within <= 0.0 || k + 1 == channels.size()) {
        const double loc = mol.site * st.h;
        st.reactions.push_back({st.time, loc});
        st.last_reaction_time = st.time;
        st.remove(index);
        place_products(st, ch.products, loc, ch.product_separation, rng);
        resolve_contacts(st, rng);
        return true;
      }
    }
    // Floating-point dust can leave `within` barely positive after every
    // channel of a hop-only molecule; take the nearest open direction.
    if (mol.site < st.n_sites)
      ++mol.site;
    else
      --mol.site;
    ++st.hop_count;
    react_after_hop(st, index, rng);
    return true;
  };

  if (!(stop.kind == StopKind::AllReacted && !st.reactions_possible())) {
    for (;;) {
      if (stop.kind == StopKind::EventCount && st.event_count >= stop.max_events)
        break;
      if (!step()) break;
      if (stop.kind == StopKind::AllReacted && !st.reactions_possible()) break;
    }
  }
  if (stop.kind == StopKind::TimeHorizon && st.time < horizon)
    st.time = horizon;
  take_snapshots_up_to(st.time);

  rec.extinction_time = st.reactions_possible()
                            ? std::numeric_limits<double>::quiet_NaN()
                        : st.reactions.empty() ? 0.0
                                               : st.last_reaction_time;
  rec.t0_reaction_count = st.t0_reaction_count;
  rec.hop_count = st.hop_count;
  rec.event_count = st.event_count;
  rec.reactions = std::move(st.reactions);
  if (st.hop_count > 0) rec.widths.add(st.h, st.hop_count);
  if (measure_wall)
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  rec.realization_index = realization_index;
  return rec;
}

}  // namespace fpkmc::lattice
