// Protective-domain meshes.  A mesh is a sorted array of node positions plus
// endpoint semantics; hop rates are derived lazily, per occupant, from the
// two spacings flanking each node, which covers uniform interior nodes,
// short absorbing boundary cells, and reflecting half cells with one rule.
#ifndef DLFPKMC_MESH_HPP
#define DLFPKMC_MESH_HPP

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dlfpkmc/potential.hpp"
#include "dlfpkmc/wpe_rates.hpp"

namespace fpkmc {

// Relative slack when deciding whether a point already sits on a lattice.
inline constexpr double kLatticeSnapTol = 1e-9;

enum class EndpointKind : std::uint8_t {
  Absorbing,      // endpoint is a lattice node; stepping onto it exits
  AbsorbingCell,  // endpoint node closer than one spacing to its neighbor
  ReflectingCell  // wall is not a node; nearest node keeps a ghost
                  // half-cell of width h_ref/2 toward the wall
};

struct MeshOccupant {
  double diffusion = 0.0;
  const PotentialField* potential = nullptr;
};

class DomainMesh {
 public:
  std::vector<double> points;  // ascending node positions
  EndpointKind left_kind = EndpointKind::Absorbing;
  EndpointKind right_kind = EndpointKind::Absorbing;
  double h_ref_left = 0.0;   // 2 * (distance from first node to left wall)
  double h_ref_right = 0.0;  // 2 * (distance from last node to right wall)
  double h_main = 0.0;       // nominal lattice spacing
  int occupant_node[2] = {-1, -1};

  int n() const { return static_cast<int>(points.size()); }
  double spacing(int i) const { return points[i + 1] - points[i]; }

  bool left_absorbing() const {
    return left_kind != EndpointKind::ReflectingCell;
  }
  bool right_absorbing() const {
    return right_kind != EndpointKind::ReflectingCell;
  }
  bool exit_node(int i) const {
    return (i == 0 && left_absorbing()) || (i == n() - 1 && right_absorbing());
  }

  void set_occupants(const MeshOccupant& o0) {
    occ_[0] = o0;
    n_occ_ = 1;
    rates_.assign(static_cast<std::size_t>(n()) * 2, nan_);
  }
  void set_occupants(const MeshOccupant& o0, const MeshOccupant& o1) {
    occ_[0] = o0;
    occ_[1] = o1;
    n_occ_ = 2;
    rates_.assign(static_cast<std::size_t>(n()) * 4, nan_);
  }
  int n_occupants() const { return n_occ_; }
  const MeshOccupant& occupant(int k) const { return occ_[k]; }

  // Hop rate for occupant k out of node i; dir 0 = left, 1 = right.
  // Computed on first use and cached.
  double rate(int k, int i, int dir) const {
    double& r = rates_[(static_cast<std::size_t>(k) * 2 + dir) * n() + i];
    if (std::isnan(r)) r = compute_rate(k, i, dir);
    return r;
  }

 private:
  double compute_rate(int k, int i, int dir) const {
    const int last = n() - 1;
    assert(i >= 0 && i <= last);
    if (exit_node(i)) return 0.0;  // walks terminate there; never queried
    double h_j, h_other, x_to;
    if (dir == 1) {
      if (i == last) return 0.0;  // reflecting end, no node beyond
      h_j = spacing(i);
      h_other = i == 0 ? h_ref_left : spacing(i - 1);
      x_to = points[i + 1];
    } else {
      if (i == 0) return 0.0;  // reflecting end
      h_j = points[i] - points[i - 1];
      h_other = i == last ? h_ref_right : spacing(i);
      x_to = points[i - 1];
    }
    const PotentialField& v = *occ_[k].potential;
    return nonuniform_rate(occ_[k].diffusion, h_j, h_other, v(points[i]),
                           v(x_to));
  }

  static constexpr double nan_ = std::numeric_limits<double>::quiet_NaN();
  std::array<MeshOccupant, 2> occ_{};
  int n_occ_ = 0;
  mutable std::vector<double> rates_;
};

// Mesh for a lone molecule at pos inside the protective domain [a, b].
// Spacing is r / ceil(r / h_s_max) with r the distance to the dominant
// absorbing endpoint, so that endpoint and the molecule share a lattice.
// The opposite endpoint picks up a boundary cell when the lattice misses it.
// Exactly one end may be ReflectingCell (a truncating reflecting wall).
DomainMesh single_mesh(double pos, double a, double b, EndpointKind left,
                       EndpointKind right, double h_s_max,
                       const MeshOccupant& occ);

// Mesh for an aligned pair at lattice positions p_left < p_right (their
// separation an integer multiple of h_p) over the domain [a, b].  Endpoint
// kinds may be Absorbing (will become AbsorbingCell if off-lattice) or
// ReflectingCell.
DomainMesh pair_mesh(double p_left, double p_right, double a, double b,
                     EndpointKind left, EndpointKind right, double h_p,
                     const MeshOccupant& occ_left,
                     const MeshOccupant& occ_right);

// One-hop submesh that brings an unaligned pair onto a common lattice of
// spacing h_p.  Channel order: left molecule {left, right}, then right
// molecule {left, right}.  A hop toward the partner covers h2, away covers
// h1 = h_p - h2.  Outward hops that would land on or past a domain endpoint
// either exit (absorbing end; target clamped to the endpoint) or are
// disabled (reflecting end, rate zeroed) -- this only arises when a wall
// truncated the domain to within one h_p of a molecule.
struct AlignmentSubmesh {
  bool needed = false;  // false: separation already within snap tolerance
  double h1 = 0.0, h2 = 0.0;
  std::array<double, 4> target{};  // absolute position after each hop
  std::array<double, 4> rate{};
  std::array<bool, 4> exits{};  // channel is a first passage, not a hop
};

AlignmentSubmesh pair_alignment_submesh(double p_left, double p_right,
                                        double a, double b, EndpointKind left,
                                        EndpointKind right, double h_p,
                                        const MeshOccupant& occ_left,
                                        const MeshOccupant& occ_right);

}  // namespace fpkmc

#endif  // DLFPKMC_MESH_HPP
