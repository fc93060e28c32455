#include "dlfpkmc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fpkmc::config {

namespace {

using nlohmann::json;

constexpr const char* kArtifactVersion = "1";

[[noreturn]] void fail(const std::string& section, const std::string& what) {
  throw std::invalid_argument("config: " + what + " in " + section);
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(section, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || key == k;
    if (!ok) fail(section, "unknown key '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& section,
                    const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(section, std::string("missing key '") + key + "'");
  return *it;
}

double get_number(const json& v, const std::string& section, const char* key) {
  if (!v.is_number()) fail(section, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& v, const std::string& section,
                        const char* key) {
  if (!v.is_number_unsigned())
    fail(section, std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& section,
                       const char* key) {
  if (!v.is_string()) fail(section, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

PotentialField parse_potential(const json& p, const std::string& section) {
  const std::string kind = get_string(require(p, section, "kind"), section, "kind");
  if (kind == "zero") {
    check_keys(p, section, {"kind"});
    return PotentialField::zero();
  }
  if (kind == "cosine") {
    check_keys(p, section, {"kind", "amplitude", "frequency"});
    return PotentialField::cosine(
        get_number(require(p, section, "amplitude"), section, "amplitude"),
        get_number(require(p, section, "frequency"), section, "frequency"));
  }
  if (kind == "step") {
    check_keys(p, section, {"kind", "height", "location"});
    return PotentialField::step(
        get_number(require(p, section, "height"), section, "height"),
        get_number(require(p, section, "location"), section, "location"));
  }
  if (kind == "tabulated") {
    check_keys(p, section, {"kind", "x", "v"});
    std::vector<double> xs, vs;
    for (const auto& x : require(p, section, "x")) xs.push_back(x.get<double>());
    for (const auto& v : require(p, section, "v")) vs.push_back(v.get<double>());
    return PotentialField::tabulated(std::move(xs), std::move(vs));
  }
  fail(section, "unknown potential kind '" + kind + "'");
}

WallKind parse_wall(const std::string& s, const std::string& section) {
  if (s == "reflecting") return WallKind::Reflecting;
  if (s == "absorbing") return WallKind::Absorbing;
  fail(section, "wall must be 'reflecting' or 'absorbing', got '" + s + "'");
}

std::string potential_canonical(const PotentialField& p) {
  switch (p.kind()) {
    case PotentialKind::Zero:
      return "zero";
    case PotentialKind::Cosine:
      return "cosine(" + format_double(p.amplitude()) + "," +
             format_double(p.frequency()) + ")";
    case PotentialKind::Step:
      return "step(" + format_double(p.step_height()) + "," +
             format_double(p.step_location()) + ")";
    case PotentialKind::Tabulated: {
      std::string out = "tabulated(";
      for (std::size_t i = 0; i < p.table_x().size(); ++i) {
        if (i) out += ",";
        out += format_double(p.table_x()[i]) + ":" +
               format_double(p.table_v()[i]);
      }
      return out + ")";
    }
  }
  return "?";
}

}  // namespace

Experiment parse_experiment(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  check_keys(root, "top level",
             {"world", "species", "unimolecular", "bimolecular", "params",
              "initial", "stop", "seed", "realizations", "snapshot_times",
              "timing", "lattice_spacing", "out_dir", "survival_points"});

  Experiment ex;

  if (root.contains("world")) {
    const json& w = root["world"];
    check_keys(w, "world", {"length", "left_wall", "right_wall"});
    if (w.contains("length"))
      ex.world.length = get_number(w["length"], "world", "length");
    if (w.contains("left_wall"))
      ex.world.left = parse_wall(get_string(w["left_wall"], "world", "left_wall"), "world");
    if (w.contains("right_wall"))
      ex.world.right = parse_wall(get_string(w["right_wall"], "world", "right_wall"), "world");
    if (!(ex.world.length > 0.0)) fail("world", "'length' must be positive");
  }

  std::vector<SpeciesSpec> species;
  std::map<std::string, SpeciesId> by_name;
  for (const json& s : require(root, "top level", "species")) {
    check_keys(s, "species", {"name", "diffusion", "potential"});
    SpeciesSpec spec;
    spec.name = get_string(require(s, "species", "name"), "species", "name");
    spec.diffusion = get_number(require(s, "species", "diffusion"), "species",
                                "diffusion");
    if (!(spec.diffusion > 0.0)) fail("species", "'diffusion' must be positive");
    if (s.contains("potential"))
      spec.potential = parse_potential(s["potential"], "species '" + spec.name + "' potential");
    if (by_name.count(spec.name)) fail("species", "duplicate name '" + spec.name + "'");
    by_name[spec.name] = static_cast<SpeciesId>(species.size());
    species.push_back(std::move(spec));
  }
  if (species.empty()) fail("species", "at least one species required");

  const auto species_id = [&](const json& v, const std::string& section,
                              const char* key) {
    const std::string name = get_string(v, section, key);
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail(section, "unknown species '" + name + "'");
    return it->second;
  };

  std::vector<UnimolecularChannel> uni;
  if (root.contains("unimolecular")) {
    for (const json& c : root["unimolecular"]) {
      check_keys(c, "unimolecular",
                 {"reactant", "rate", "products", "product_separation"});
      UnimolecularChannel ch;
      ch.reactant = species_id(require(c, "unimolecular", "reactant"),
                               "unimolecular", "reactant");
      ch.rate = get_number(require(c, "unimolecular", "rate"), "unimolecular", "rate");
      if (c.contains("products"))
        for (const json& p : c["products"])
          ch.products.push_back(species_id(p, "unimolecular", "products"));
      if (c.contains("product_separation"))
        ch.product_separation = get_number(c["product_separation"],
                                           "unimolecular", "product_separation");
      uni.push_back(std::move(ch));
    }
  }

  std::vector<BimolecularChannel> bi;
  if (root.contains("bimolecular")) {
    for (const json& c : root["bimolecular"]) {
      check_keys(c, "bimolecular", {"reactant_a", "reactant_b", "reaction_radius",
                                    "products", "product_separation"});
      BimolecularChannel ch;
      ch.reactant_a = species_id(require(c, "bimolecular", "reactant_a"),
                                 "bimolecular", "reactant_a");
      ch.reactant_b = species_id(require(c, "bimolecular", "reactant_b"),
                                 "bimolecular", "reactant_b");
      ch.reaction_radius = get_number(require(c, "bimolecular", "reaction_radius"),
                                      "bimolecular", "reaction_radius");
      if (c.contains("products"))
        for (const json& p : c["products"])
          ch.products.push_back(species_id(p, "bimolecular", "products"));
      if (c.contains("product_separation"))
        ch.product_separation = get_number(c["product_separation"],
                                           "bimolecular", "product_separation");
      bi.push_back(std::move(ch));
    }
  }

  try {
    ex.net = ReactionNetwork(std::move(species), std::move(uni), std::move(bi));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  const json& pr = require(root, "top level", "params");
  check_keys(pr, "params", {"h_p", "h_s_max", "r_pair", "pair_cap",
                            "lone_cap_fraction", "max_path_hops"});
  ex.params.h_p = get_number(require(pr, "params", "h_p"), "params", "h_p");
  ex.params.h_s_max =
      get_number(require(pr, "params", "h_s_max"), "params", "h_s_max");
  ex.params.r_pair =
      get_number(require(pr, "params", "r_pair"), "params", "r_pair");
  if (pr.contains("pair_cap")) {
    if (!pr["pair_cap"].is_boolean()) fail("params", "'pair_cap' must be a boolean");
    ex.params.pair_cap = pr["pair_cap"].get<bool>();
  }
  if (pr.contains("lone_cap_fraction"))
    ex.params.lone_cap_fraction =
        get_number(pr["lone_cap_fraction"], "params", "lone_cap_fraction");
  if (pr.contains("max_path_hops"))
    ex.params.max_path_hops =
        get_count(pr["max_path_hops"], "params", "max_path_hops");

  for (const json& ip : require(root, "top level", "initial")) {
    check_keys(ip, "initial", {"species", "count", "positions", "uniform"});
    InitialPlacement pl;
    pl.species = species_id(require(ip, "initial", "species"), "initial", "species");
    if (ip.contains("positions")) {
      if (ip.contains("count") || ip.contains("uniform"))
        fail("initial", "'positions' excludes 'count' and 'uniform'");
      for (const json& x : ip["positions"])
        pl.positions.push_back(x.get<double>());
      pl.count = static_cast<int>(pl.positions.size());
    } else {
      pl.count = static_cast<int>(
          get_count(require(ip, "initial", "count"), "initial", "count"));
      if (ip.contains("uniform")) {
        const json& u = ip["uniform"];
        if (!u.is_array() || u.size() != 2)
          fail("initial", "'uniform' must be [lo, hi]");
        pl.uniform_lo = u[0].get<double>();
        pl.uniform_hi = u[1].get<double>();
        if (!(pl.uniform_lo >= 0.0 && pl.uniform_hi <= ex.world.length &&
              pl.uniform_lo < pl.uniform_hi))
          fail("initial", "'uniform' interval outside the world");
      }
    }
    ex.initial.push_back(std::move(pl));
  }
  if (ex.initial.empty()) fail("initial", "at least one placement required");

  if (root.contains("stop")) {
    const json& st = root["stop"];
    check_keys(st, "stop", {"kind", "time_horizon", "max_events"});
    const std::string kind = get_string(require(st, "stop", "kind"), "stop", "kind");
    if (kind == "all_reacted") {
      ex.stop.kind = StopKind::AllReacted;
    } else if (kind == "time_horizon") {
      ex.stop.kind = StopKind::TimeHorizon;
      ex.stop.time_horizon =
          get_number(require(st, "stop", "time_horizon"), "stop", "time_horizon");
      if (!(ex.stop.time_horizon > 0.0))
        fail("stop", "'time_horizon' must be positive");
    } else if (kind == "event_count") {
      ex.stop.kind = StopKind::EventCount;
      ex.stop.max_events =
          get_count(require(st, "stop", "max_events"), "stop", "max_events");
    } else {
      fail("stop", "unknown kind '" + kind + "'");
    }
  }

  if (root.contains("seed")) ex.seed = get_count(root["seed"], "top level", "seed");
  if (root.contains("realizations"))
    ex.realizations = get_count(root["realizations"], "top level", "realizations");
  if (root.contains("snapshot_times")) {
    for (const json& t : root["snapshot_times"])
      ex.snapshot_times.push_back(t.get<double>());
    for (std::size_t i = 1; i < ex.snapshot_times.size(); ++i)
      if (!(ex.snapshot_times[i] > ex.snapshot_times[i - 1]))
        fail("snapshot_times", "times must be strictly increasing");
  }
  if (root.contains("timing")) {
    if (!root["timing"].is_boolean()) fail("top level", "'timing' must be a boolean");
    ex.timing = root["timing"].get<bool>();
  }
  if (root.contains("lattice_spacing"))
    ex.lattice_spacing =
        get_number(root["lattice_spacing"], "top level", "lattice_spacing");
  if (root.contains("out_dir"))
    ex.out_dir = get_string(root["out_dir"], "top level", "out_dir");
  if (root.contains("survival_points")) {
    ex.survival_points =
        get_count(root["survival_points"], "top level", "survival_points");
    if (ex.survival_points == 1)
      fail("top level", "'survival_points' needs at least two grid points");
  }

  return ex;
}

std::string Experiment::canonical() const {
  std::string out = "world{" + format_double(world.length) + "," +
                    (world.left == WallKind::Reflecting ? "r" : "a") +
                    (world.right == WallKind::Reflecting ? "r" : "a") + "}";
  out += "species{";
  for (const auto& s : net.species())
    out += s.name + ":" + format_double(s.diffusion) + ":" +
           potential_canonical(s.potential) + ";";
  out += "}uni{";
  for (const auto& c : net.unimolecular()) {
    out += std::to_string(c.reactant) + ":" + format_double(c.rate) + ":";
    for (SpeciesId p : c.products) out += std::to_string(p) + ",";
    out += ":" + format_double(c.product_separation) + ";";
  }
  out += "}bi{";
  for (const auto& c : net.bimolecular()) {
    out += std::to_string(c.reactant_a) + "+" + std::to_string(c.reactant_b) +
           ":" + format_double(c.reaction_radius) + ":";
    for (SpeciesId p : c.products) out += std::to_string(p) + ",";
    out += ":" + format_double(c.product_separation) + ";";
  }
  out += "}params{" + format_double(params.h_p) + "," +
         format_double(params.h_s_max) + "," + format_double(params.r_pair) +
         "," + (params.pair_cap ? "1" : "0") + "," +
         format_double(params.lone_cap_fraction) + "," +
         std::to_string(params.max_path_hops) + "}initial{";
  for (const auto& ip : initial) {
    out += std::to_string(ip.species) + ":" + std::to_string(ip.count) + ":";
    for (double x : ip.positions) out += format_double(x) + ",";
    out += ":" + format_double(ip.uniform_lo) + ":" +
           format_double(ip.uniform_hi) + ";";
  }
  out += "}stop{" + std::to_string(static_cast<int>(stop.kind)) + "," +
         format_double(stop.time_horizon) + "," +
         std::to_string(stop.max_events) + "}seed=" + std::to_string(seed) +
         ";realizations=" + std::to_string(realizations) + ";snapshots{";
  for (double t : snapshot_times) out += format_double(t) + ",";
  // out_dir and survival_points are presentation plumbing: they change where
  // and how results are reported, not the experiment, so the hash ignores
  // them and relocated reruns stay byte-comparable.
  out += "}timing=" + std::string(timing ? "1" : "0") +
         ";lattice=" + format_double(lattice_spacing);
  return out;
}

std::uint64_t Experiment::hash() const {
  const std::string s = canonical();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

std::string csv_metadata_line(std::uint64_t config_hash, std::uint64_t seed) {
  char hex[17];
  for (int i = 15; i >= 0; --i) {
    hex[i] = "0123456789abcdef"[config_hash & 0xf];
    config_hash >>= 4;
  }
  hex[16] = '\0';
  return std::string("# config=") + hex + " seed=" + std::to_string(seed) +
         " version=" + kArtifactVersion + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<std::string> preset_names() {
  return {"vzero",           "vcos",          "vstep",   "twenty-molecule",
          "hundred-molecule", "one-well",     "two-well", "scaling"};
}

namespace {

// Two molecules on the unit interval, reacting at 0.02, paired within twice
// that; mesh 8 widths per radius with singles capped at 8 pair widths.
constexpr const char* kTwoMoleculeBase = R"({
  "world": {"length": 1.0},
  "species": [
    {"name": "A", "diffusion": 1.0, "potential": %POT%},
    {"name": "B", "diffusion": 1.0, "potential": %POT%}
  ],
  "bimolecular": [
    {"reactant_a": "A", "reactant_b": "B", "reaction_radius": 0.02}
  ],
  "params": {"h_p": 0.0025, "h_s_max": 0.02, "r_pair": 0.04},
  "initial": [
    {"species": "A", "count": 1},
    {"species": "B", "count": 1}
  ],
  "stop": {"kind": "all_reacted"},
  "seed": 20260301,
  "realizations": 10000
})";

std::string two_molecule(const std::string& potential) {
  std::string text = kTwoMoleculeBase;
  for (std::size_t at = text.find("%POT%"); at != std::string::npos;
       at = text.find("%POT%"))
    text.replace(at, 5, potential);
  return text;
}

}  // namespace

std::string preset_text(const std::string& name) {
  if (name == "vzero") return two_molecule(R"({"kind": "zero"})");
  if (name == "vcos")
    return two_molecule(R"({"kind": "cosine", "amplitude": 1.0, "frequency": 2.0})");
  if (name == "vstep")
    return two_molecule(R"({"kind": "step", "height": 2.0, "location": 0.5})");
  if (name == "one-well") {
    std::string t = two_molecule(
        R"({"kind": "cosine", "amplitude": 1.0, "frequency": 1.0})");
    // Potential-comparison runs resolve singles at the pair width.
    const std::string from = R"("h_s_max": 0.02)";
    t.replace(t.find(from), from.size(), R"("h_s_max": 0.0025)");
    return t;
  }
  if (name == "two-well") {
    std::string t = two_molecule(
        R"({"kind": "cosine", "amplitude": 1.0, "frequency": 2.0})");
    const std::string from = R"("h_s_max": 0.02)";
    t.replace(t.find(from), from.size(), R"("h_s_max": 0.0025)");
    return t;
  }
  if (name == "twenty-molecule")
    return R"({
  "world": {"length": 1.0},
  "species": [
    {"name": "A", "diffusion": 1.0},
    {"name": "B", "diffusion": 1.0}
  ],
  "bimolecular": [
    {"reactant_a": "A", "reactant_b": "B", "reaction_radius": 0.02}
  ],
  "params": {"h_p": 0.0025, "h_s_max": 0.02, "r_pair": 0.04},
  "initial": [
    {"species": "A", "count": 10, "uniform": [0.1, 0.4]},
    {"species": "B", "count": 10, "uniform": [0.6, 0.9]}
  ],
  "stop": {"kind": "all_reacted"},
  "seed": 20260302,
  "realizations": 1000
})";
  if (name == "hundred-molecule")
    return R"({
  "world": {"length": 1.0},
  "species": [
    {"name": "A", "diffusion": 1.0},
    {"name": "B", "diffusion": 1.0}
  ],
  "bimolecular": [
    {"reactant_a": "A", "reactant_b": "B", "reaction_radius": 0.001}
  ],
  "params": {"h_p": 0.0005, "h_s_max": 0.004, "r_pair": 0.004},
  "initial": [
    {"species": "A", "count": 50},
    {"species": "B", "count": 50}
  ],
  "stop": {"kind": "all_reacted"},
  "seed": 20260303,
  "realizations": 200
})";
  if (name == "scaling")
    return R"({
  "world": {"length": 1.0},
  "species": [
    {"name": "A", "diffusion": 1.0},
    {"name": "B", "diffusion": 1.0}
  ],
  "bimolecular": [
    {"reactant_a": "A", "reactant_b": "B", "reaction_radius": 0.0001}
  ],
  "params": {"h_p": 0.0001, "h_s_max": 0.02, "r_pair": 0.005},
  "initial": [
    {"species": "A", "count": 16},
    {"species": "B", "count": 16}
  ],
  "stop": {"kind": "all_reacted"},
  "seed": 20260304,
  "realizations": 1000,
  "lattice_spacing": 0.0001
})";
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace fpkmc::config
