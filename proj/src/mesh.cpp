#include "dlfpkmc/mesh.hpp"

#include <algorithm>
#include <stdexcept>

namespace fpkmc {

namespace {

// Nodes of a lattice anchored at `origin` with spacing h, clipped to
// [lo, hi]:  origin + m*h for m in [-m_lo, m_hi].
struct ClippedLattice {
  int m_lo, m_hi;        // inclusive step counts on each side of the origin
  double delta_lo;       // gap from the outermost node down to lo, >= 0
  double delta_hi;       // gap from the outermost node up to hi, >= 0
};

ClippedLattice clip_lattice(double origin, double h, double lo, double hi) {
  ClippedLattice c;
  c.m_lo = static_cast<int>(std::floor((origin - lo) / h + kLatticeSnapTol));
  c.m_hi = static_cast<int>(std::floor((hi - origin) / h + kLatticeSnapTol));
  c.delta_lo = std::max(0.0, (origin - c.m_lo * h) - lo);
  c.delta_hi = std::max(0.0, hi - (origin + c.m_hi * h));
  return c;
}

// Assembles node positions and endpoint kinds for a lattice anchored at
// `origin` inside [a, b].  Absorbing endpoints always end up exactly on a/b:
// when the lattice grazes the boundary the outermost node is snapped onto
// it, otherwise a short boundary cell is appended.  Reflecting endpoints
// keep the wall off the mesh and record the ghost cell width 2*delta.
// Returns the index of the origin node.
int assemble(DomainMesh& mesh, double origin, double h, double a, double b,
             EndpointKind left, EndpointKind right) {
  const ClippedLattice c = clip_lattice(origin, h, a, b);
  const double snap = kLatticeSnapTol * h;

  mesh.points.clear();
  mesh.h_ref_left = mesh.h_ref_right = 0.0;
  int origin_index = c.m_lo;

  if (left == EndpointKind::ReflectingCell) {
    mesh.left_kind = EndpointKind::ReflectingCell;
    mesh.h_ref_left = c.delta_lo <= snap ? 0.0 : 2.0 * c.delta_lo;
  } else if (c.delta_lo <= snap) {
    mesh.left_kind = EndpointKind::Absorbing;
  } else {
    mesh.left_kind = EndpointKind::AbsorbingCell;
    mesh.points.push_back(a);
    ++origin_index;
  }

  const int first_m = -c.m_lo;
  for (int m = first_m; m <= c.m_hi; ++m)
    mesh.points.push_back(origin + m * h);

  // Snap grazing lattice nodes exactly onto absorbing boundaries (and keep
  // every node inside [a, b] regardless of endpoint kind).
  if (mesh.left_kind == EndpointKind::Absorbing)
    mesh.points.front() = a;
  else
    mesh.points.front() = std::max(mesh.points.front(), a);

  if (right == EndpointKind::ReflectingCell) {
    mesh.right_kind = EndpointKind::ReflectingCell;
    mesh.h_ref_right = c.delta_hi <= snap ? 0.0 : 2.0 * c.delta_hi;
    mesh.points.back() = std::min(mesh.points.back(), b);
  } else if (c.delta_hi <= snap) {
    mesh.right_kind = EndpointKind::Absorbing;
    mesh.points.back() = b;
  } else {
    mesh.right_kind = EndpointKind::AbsorbingCell;
    mesh.points.push_back(b);
  }

  mesh.h_main = h;
  if (mesh.n() < 2) throw std::logic_error("degenerate mesh: < 2 nodes");
  return origin_index;
}

}  // namespace

namespace {

// A molecule may sit exactly on a reflecting wall (the wall-node case); on
// an absorbing endpoint it would already have exited.
bool inside_domain(double pl, double pr, double a, double b, EndpointKind left,
                   EndpointKind right) {
  const bool lo = left == EndpointKind::ReflectingCell ? pl >= a : pl > a;
  const bool hi = right == EndpointKind::ReflectingCell ? pr <= b : pr < b;
  return lo && hi;
}

}  // namespace

DomainMesh single_mesh(double pos, double a, double b, EndpointKind left,
                       EndpointKind right, double h_s_max,
                       const MeshOccupant& occ) {
  if (!inside_domain(pos, pos, a, b, left, right))
    throw std::invalid_argument("molecule must lie inside its domain");
  if (!(h_s_max > 0.0)) throw std::invalid_argument("h_s_max must be > 0");
  if (left == EndpointKind::ReflectingCell &&
      right == EndpointKind::ReflectingCell)
    throw std::logic_error("single-molecule domain with no absorbing end");

  // The spacing divides the distance to the dominant absorbing endpoint: the
  // farther one, since truncation only ever shortens a side.
  double r;
  if (left == EndpointKind::ReflectingCell)
    r = b - pos;
  else if (right == EndpointKind::ReflectingCell)
    r = pos - a;
  else
    r = std::max(pos - a, b - pos);
  // At least one cell: for r below the snap tolerance the adjusted ratio
  // would round to zero cells and the division would blow up.
  const double h =
      r / std::max(1.0, std::ceil(r / h_s_max - kLatticeSnapTol));

  DomainMesh mesh;
  const int idx = assemble(mesh, pos, h, a, b, left, right);
  mesh.occupant_node[0] = idx;
  mesh.set_occupants(occ);
  return mesh;
}

DomainMesh pair_mesh(double p_left, double p_right, double a, double b,
                     EndpointKind left, EndpointKind right, double h_p,
                     const MeshOccupant& occ_left,
                     const MeshOccupant& occ_right) {
  if (!(p_left < p_right) ||
      !inside_domain(p_left, p_right, a, b, left, right))
    throw std::invalid_argument("pair must lie inside its domain, ordered");
  if (!(h_p > 0.0)) throw std::invalid_argument("h_p must be > 0");
  const double sep = p_right - p_left;
  const int k = static_cast<int>(std::lround(sep / h_p));
  if (k < 1 || std::fabs(sep - k * h_p) > kLatticeSnapTol * h_p * (k + 1))
    throw std::invalid_argument("pair positions are not lattice aligned");

  DomainMesh mesh;
  const int idx = assemble(mesh, p_left, h_p, a, b, left, right);
  mesh.occupant_node[0] = idx;
  mesh.occupant_node[1] = idx + k;
  mesh.set_occupants(occ_left, occ_right);
  return mesh;
}

AlignmentSubmesh pair_alignment_submesh(double p_left, double p_right,
                                        double a, double b, EndpointKind left,
                                        EndpointKind right, double h_p,
                                        const MeshOccupant& occ_left,
                                        const MeshOccupant& occ_right) {
  if (!(p_left < p_right) ||
      !inside_domain(p_left, p_right, a, b, left, right))
    throw std::invalid_argument("pair must lie inside its domain, ordered");
  const double sep = p_right - p_left;
  const double rem = sep - std::floor(sep / h_p) * h_p;

  AlignmentSubmesh sub;
  if (rem <= kLatticeSnapTol * h_p || rem >= h_p * (1.0 - kLatticeSnapTol))
    return sub;  // already aligned to within snapping tolerance

  sub.needed = true;
  // A hop toward the partner covers the remainder h2, a hop away covers the
  // complement h1, so either hop leaves the separation a multiple of h_p.
  sub.h2 = rem;
  sub.h1 = h_p - rem;
  const PotentialField& vl = *occ_left.potential;
  const PotentialField& vr = *occ_right.potential;

  sub.target[0] = p_left - sub.h1;
  sub.target[1] = p_left + sub.h2;
  sub.target[2] = p_right - sub.h2;
  sub.target[3] = p_right + sub.h1;
  if (sub.target[0] <= a) {
    if (left == EndpointKind::ReflectingCell) {
      sub.rate[0] = 0.0;
      sub.target[0] = p_left;
    } else {
      sub.exits[0] = true;
      sub.target[0] = a;
    }
  }
  if (sub.target[3] >= b) {
    if (right == EndpointKind::ReflectingCell) {
      sub.rate[3] = 0.0;
      sub.target[3] = p_right;
    } else {
      sub.exits[3] = true;
      sub.target[3] = b;
    }
  }
  // Inward hops cover h2 < h_p < separation, so they can't exit or cross.
  sub.rate[1] = nonuniform_rate(occ_left.diffusion, sub.h2, sub.h1, vl(p_left),
                                vl(sub.target[1]));
  sub.rate[2] = nonuniform_rate(occ_right.diffusion, sub.h2, sub.h1,
                                vr(p_right), vr(sub.target[2]));
  if (!(sub.target[0] == p_left && sub.rate[0] == 0.0))
    sub.rate[0] = nonuniform_rate(occ_left.diffusion, sub.h1, sub.h2,
                                  vl(p_left), vl(sub.target[0]));
  if (!(sub.target[3] == p_right && sub.rate[3] == 0.0))
    sub.rate[3] = nonuniform_rate(occ_right.diffusion, sub.h1, sub.h2,
                                  vr(p_right), vr(sub.target[3]));
  return sub;
}

}  // namespace fpkmc
