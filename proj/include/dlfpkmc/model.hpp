// Shared model vocabulary: species, reaction channels, the 1D world, and
// run-level simulation parameters.
#ifndef DLFPKMC_MODEL_HPP
#define DLFPKMC_MODEL_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlfpkmc/potential.hpp"

namespace fpkmc {

using SpeciesId = std::int32_t;
using MoleculeId = std::int64_t;

struct SpeciesSpec {
  std::string name;
  double diffusion = 1.0;
  PotentialField potential;
};

struct UnimolecularChannel {
  SpeciesId reactant = -1;
  double rate = 0.0;
  std::vector<SpeciesId> products;  // 0, 1, or 2 entries
  double product_separation = 0.0;  // used only with 2 products
};

struct BimolecularChannel {
  SpeciesId reactant_a = -1;  // must differ from reactant_b: in 1D, same
  SpeciesId reactant_b = -1;  // species cannot pass each other to collide
  double reaction_radius = 0.0;
  std::vector<SpeciesId> products;
  double product_separation = 0.0;
};

enum class WallKind : std::uint8_t { Reflecting, Absorbing };

struct WorldSpec {
  double length = 1.0;
  WallKind left = WallKind::Reflecting;
  WallKind right = WallKind::Reflecting;
};

class ReactionNetwork {
 public:
  ReactionNetwork() = default;
  ReactionNetwork(std::vector<SpeciesSpec> species,
                  std::vector<UnimolecularChannel> unimolecular,
                  std::vector<BimolecularChannel> bimolecular)
      : species_(std::move(species)),
        unimolecular_(std::move(unimolecular)),
        bimolecular_(std::move(bimolecular)) {
    validate();
    index();
  }

  const std::vector<SpeciesSpec>& species() const { return species_; }
  const SpeciesSpec& species(SpeciesId s) const { return species_[s]; }
  std::size_t n_species() const { return species_.size(); }
  const std::vector<UnimolecularChannel>& unimolecular() const {
    return unimolecular_;
  }
  const std::vector<BimolecularChannel>& bimolecular() const {
    return bimolecular_;
  }

  // Index of the bimolecular channel between a and b, or -1.
  int bimolecular_channel(SpeciesId a, SpeciesId b) const {
    return pair_channel_[pair_key(a, b)];
  }

  // Reaction radius between a and b; 0 when the pair is inert.
  double reaction_radius(SpeciesId a, SpeciesId b) const {
    const int c = bimolecular_channel(a, b);
    return c < 0 ? 0.0 : bimolecular_[c].reaction_radius;
  }

  bool species_reacts_bimolecularly(SpeciesId s) const {
    return reactive_[s];
  }

  // Channels consuming species s, in declaration order.
  const std::vector<int>& unimolecular_for(SpeciesId s) const {
    return uni_for_[s];
  }

  double max_reaction_radius() const { return max_radius_; }

 private:
  std::size_t pair_key(SpeciesId a, SpeciesId b) const {
    return static_cast<std::size_t>(a) * species_.size() +
           static_cast<std::size_t>(b);
  }

  void validate() const {
    auto check_species = [this](SpeciesId s, const char* what) {
      if (s < 0 || static_cast<std::size_t>(s) >= species_.size())
        throw std::invalid_argument(std::string("unknown species id in ") +
                                    what);
    };
    for (const auto& c : unimolecular_) {
      check_species(c.reactant, "unimolecular channel");
      if (!(c.rate >= 0.0))
        throw std::invalid_argument("unimolecular rate must be >= 0");
      if (c.products.size() > 2)
        throw std::invalid_argument("at most two products per channel");
      for (SpeciesId p : c.products) check_species(p, "unimolecular products");
      if (c.products.size() == 2 && !(c.product_separation > 0.0))
        throw std::invalid_argument(
            "two-product channels need a positive product separation");
    }
    for (const auto& c : bimolecular_) {
      check_species(c.reactant_a, "bimolecular channel");
      check_species(c.reactant_b, "bimolecular channel");
      if (c.reactant_a == c.reactant_b)
        throw std::invalid_argument(
            "bimolecular reactants must be distinct species");
      if (!(c.reaction_radius > 0.0))
        throw std::invalid_argument("reaction radius must be > 0");
      if (c.products.size() > 2)
        throw std::invalid_argument("at most two products per channel");
      for (SpeciesId p : c.products) check_species(p, "bimolecular products");
      if (c.products.size() == 2 && !(c.product_separation > 0.0))
        throw std::invalid_argument(
            "two-product channels need a positive product separation");
    }
  }

  void index() {
    const std::size_t n = species_.size();
    pair_channel_.assign(n * n, -1);
    reactive_.assign(n, false);
    uni_for_.assign(n, {});
    max_radius_ = 0.0;
    for (std::size_t c = 0; c < bimolecular_.size(); ++c) {
      const auto& ch = bimolecular_[c];
      auto& fwd = pair_channel_[pair_key(ch.reactant_a, ch.reactant_b)];
      auto& rev = pair_channel_[pair_key(ch.reactant_b, ch.reactant_a)];
      if (fwd != -1 || rev != -1)
        throw std::invalid_argument(
            "at most one bimolecular channel per species pair");
      fwd = rev = static_cast<int>(c);
      reactive_[ch.reactant_a] = reactive_[ch.reactant_b] = true;
      max_radius_ = std::max(max_radius_, ch.reaction_radius);
    }
    for (std::size_t c = 0; c < unimolecular_.size(); ++c)
      uni_for_[unimolecular_[c].reactant].push_back(static_cast<int>(c));
  }

  std::vector<SpeciesSpec> species_;
  std::vector<UnimolecularChannel> unimolecular_;
  std::vector<BimolecularChannel> bimolecular_;
  std::vector<int> pair_channel_;
  std::vector<char> reactive_;
  std::vector<std::vector<int>> uni_for_;
  double max_radius_ = 0.0;
};

// Discretization and domain-sizing knobs shared by a whole run.
struct KmcParams {
  double h_p = 0.0;        // pair mesh spacing; must divide reaction radii
  double h_s_max = 0.0;    // upper bound on single-molecule mesh spacing
  double r_pair = 0.0;     // pairing distance threshold
  bool pair_cap = true;    // cap pair domain size at half initial separation
  double lone_cap_fraction = 0.95;  // single-domain cap vs wall distance
  std::uint64_t max_path_hops = 0;  // 0 = unlimited; else resample guard
};

enum class StopKind : std::uint8_t { AllReacted, TimeHorizon, EventCount };

struct StopRule {
  StopKind kind = StopKind::AllReacted;
  double time_horizon = std::numeric_limits<double>::infinity();
  std::uint64_t max_events = 0;
};

struct InitialPlacement {
  SpeciesId species = -1;
  int count = 0;
  std::vector<double> positions;  // empty: uniform draws at placement
  // Uniform draw interval; both zero means the whole world.
  double uniform_lo = 0.0;
  double uniform_hi = 0.0;
};

}  // namespace fpkmc

#endif  // DLFPKMC_MODEL_HPP
