#include "dlfpkmc/path.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace fpkmc {

namespace {

// Scratch per-edge crossing counters, reused across paths to keep the hot
// loop allocation free after warmup.
thread_local std::vector<std::uint64_t> edge_scratch;

void flush_edges(const DomainMesh& mesh, WidthTally& tally) {
  for (std::size_t e = 0; e < edge_scratch.size(); ++e)
    if (edge_scratch[e])
      tally.add(mesh.spacing(static_cast<int>(e)), edge_scratch[e]);
}

}  // namespace

namespace {

// Histogram key: width snapped to three significant figures.  Widths within
// one part in a thousand are the same bin for diagnostic purposes, and
// full-precision keys would grow the tally (and the cost of merging it)
// without bound, since almost every domain produces a fresh spacing.
double snap_width(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) return w;
  const double scale = std::pow(10.0, 2.0 - std::floor(std::log10(w)));
  return std::round(w * scale) / scale;
}

}  // namespace

void WidthTally::add(double width, std::uint64_t uses) {
  width = snap_width(width);
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), width,
      [](const std::pair<double, std::uint64_t>& e, double w) {
        return e.first < w;
      });
  if (it != entries_.end() && it->first == width)
    it->second += uses;
  else
    entries_.insert(it, {width, uses});
}

void WidthTally::merge(const WidthTally& other) {
  for (const auto& [w, c] : other.entries_) add(w, c);
}

std::uint64_t WidthTally::total_uses() const {
  std::uint64_t n = 0;
  for (const auto& [w, c] : entries_) n += c;
  return n;
}

SamplePath ssa_single_path(const DomainMesh& mesh, double start_time,
                           RngStream& rng, WidthTally& tally,
                           std::uint64_t max_hops) {
  SamplePath path;
  path.start_time = start_time;
  path.n_occupants = 1;
  int i = mesh.occupant_node[0];
  path.initial_position[0] = mesh.points[i];
  assert(!mesh.exit_node(i));

  edge_scratch.assign(mesh.n() - 1, 0);
  double t = start_time;
  std::uint64_t hops = 0;
  for (;;) {
    const double rl = mesh.rate(0, i, 0);
    const double rr = mesh.rate(0, i, 1);
    const double total = rl + rr;
    t -= std::log(rng.uniform01()) / total;
    const bool right = rng.uniform01() * total <= rr;
    edge_scratch[right ? i : i - 1] += 1;
    i += right ? 1 : -1;
    ++hops;
    if (mesh.exit_node(i)) {
      path.terminal.kind =
          i == 0 ? TerminalKind::ExitLeft : TerminalKind::ExitRight;
      path.terminal.molecule = 0;
      path.terminal.time = t;
      path.terminal.position[0] = mesh.points[i];
      break;
    }
    path.hops.push_back({t, {i, i}});
    if (max_hops != 0 && hops >= max_hops) {
      path.terminal.kind = TerminalKind::HopCap;
      path.terminal.molecule = 0;
      path.terminal.time = t;
      path.terminal.position[0] = mesh.points[i];
      break;
    }
  }
  flush_edges(mesh, tally);
  return path;
}

PairPathResult ssa_pair_path(double p_left, double p_right, double a, double b,
                             EndpointKind left, EndpointKind right, double h_p,
                             int k_react, const MeshOccupant& occ_left,
                             const MeshOccupant& occ_right, double start_time,
                             RngStream& rng, WidthTally& tally,
                             std::uint64_t max_hops) {
  if (k_react < 1)
    throw std::invalid_argument("reaction separation below one lattice step");
  PairPathResult res;
  SamplePath& path = res.path;
  path.start_time = start_time;
  path.n_occupants = 2;
  path.initial_position = {p_left, p_right};

  double t = start_time;
  const AlignmentSubmesh sub = pair_alignment_submesh(
      p_left, p_right, a, b, left, right, h_p, occ_left, occ_right);
  bool has_alignment_hop = false;
  if (sub.needed) {
    const double total =
        sub.rate[0] + sub.rate[1] + sub.rate[2] + sub.rate[3];
    t -= std::log(rng.uniform01()) / total;
    const double u = rng.uniform01() * total;
    int c = 0;
    double acc = sub.rate[0];
    while (c < 3 && u > acc) acc += sub.rate[++c];
    tally.add(c == 1 || c == 2 ? sub.h2 : sub.h1, 1);

    if (sub.exits[c]) {
      path.terminal.kind =
          c == 0 ? TerminalKind::ExitLeft : TerminalKind::ExitRight;
      path.terminal.molecule = c < 2 ? 0 : 1;
      path.terminal.time = t;
      path.terminal.position = {c < 2 ? sub.target[c] : p_left,
                                c < 2 ? p_right : sub.target[c]};
      return res;
    }
    if (c < 2)
      p_left = sub.target[c];
    else
      p_right = sub.target[c];
    has_alignment_hop = true;
  } else {
    // Snap the stored separation onto the lattice exactly.
    p_right = p_left + std::lround((p_right - p_left) / h_p) * h_p;
  }

  const int k0 = static_cast<int>(std::lround((p_right - p_left) / h_p));
  assert(k0 >= k_react);
  if (k0 == k_react) {
    // The alignment hop closed the gap to the reaction separation.
    path.terminal.kind = TerminalKind::Reaction;
    path.terminal.time = t;
    path.terminal.position = {p_left, p_right};
    return res;
  }

  res.mesh = pair_mesh(p_left, p_right, a, b, left, right, h_p, occ_left,
                       occ_right);
  res.mesh_valid = true;
  const DomainMesh& mesh = res.mesh;
  int i0 = mesh.occupant_node[0];
  int i1 = mesh.occupant_node[1];
  if (has_alignment_hop) path.hops.push_back({t, {i0, i1}});

  edge_scratch.assign(mesh.n() - 1, 0);
  const int last = mesh.n() - 1;
  std::uint64_t hops = 0;
  for (;;) {
    const double r0l = mesh.rate(0, i0, 0);
    const double r0r = mesh.rate(0, i0, 1);
    const double r1l = mesh.rate(1, i1, 0);
    const double r1r = mesh.rate(1, i1, 1);
    const double total = r0l + r0r + r1l + r1r;
    t -= std::log(rng.uniform01()) / total;
    const double u = rng.uniform01() * total;
    if (u <= r0l + r0r) {
      const bool right = u > r0l;
      edge_scratch[right ? i0 : i0 - 1] += 1;
      i0 += right ? 1 : -1;
    } else {
      const bool right = u > r0l + r0r + r1l;
      edge_scratch[right ? i1 : i1 - 1] += 1;
      i1 += right ? 1 : -1;
    }
    ++hops;

    if (i1 - i0 == k_react) {
      path.terminal.kind = TerminalKind::Reaction;
      path.terminal.time = t;
      path.terminal.position = {mesh.points[i0], mesh.points[i1]};
      break;
    }
    if (i0 == 0 && mesh.left_absorbing()) {
      path.terminal.kind = TerminalKind::ExitLeft;
      path.terminal.molecule = 0;
      path.terminal.time = t;
      path.terminal.position = {mesh.points[0], mesh.points[i1]};
      break;
    }
    if (i1 == last && mesh.right_absorbing()) {
      path.terminal.kind = TerminalKind::ExitRight;
      path.terminal.molecule = 1;
      path.terminal.time = t;
      path.terminal.position = {mesh.points[i0], mesh.points[last]};
      break;
    }
    path.hops.push_back({t, {i0, i1}});
    if (max_hops != 0 && hops >= max_hops) {
      path.terminal.kind = TerminalKind::HopCap;
      path.terminal.time = t;
      path.terminal.position = {mesh.points[i0], mesh.points[i1]};
      break;
    }
  }
  flush_edges(mesh, tally);
  return res;
}

std::array<double, 2> no_passage_position(const SamplePath& path,
                                          const DomainMesh& mesh, double t) {
  assert(t >= path.start_time);
  if (t >= path.terminal.time) return path.terminal.position;
  auto it = std::upper_bound(
      path.hops.begin(), path.hops.end(), t,
      [](double tq, const PathHop& h) { return tq < h.time; });
  if (it == path.hops.begin()) return path.initial_position;
  --it;
  std::array<double, 2> pos = path.initial_position;
  pos[0] = mesh.points[it->node[0]];
  if (path.n_occupants == 2) pos[1] = mesh.points[it->node[1]];
  return pos;
}

std::uint64_t consumed_hops(const SamplePath& path, double t) {
  if (t >= path.terminal.time) return path.hops.size();
  const auto it = std::upper_bound(
      path.hops.begin(), path.hops.end(), t,
      [](double tq, const PathHop& h) { return tq < h.time; });
  return static_cast<std::uint64_t>(it - path.hops.begin());
}

}  // namespace fpkmc
