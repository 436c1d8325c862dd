#include "aot/topology.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "aot/error.hpp"

namespace aot {

using nlohmann::json;

NodePath NodePath::propagated(std::size_t action) const {
  std::vector<Step> steps = steps_;
  steps.push_back(Step{static_cast<std::uint32_t>(action), Step::kOpen});
  return NodePath(std::move(steps));
}

NodePath NodePath::child(std::size_t branch) const {
  std::vector<Step> steps = steps_;
  steps.back().branch = static_cast<std::int32_t>(branch);
  return NodePath(std::move(steps));
}

NodePath NodePath::parent_propagated() const {
  std::vector<Step> steps = steps_;
  steps.back().branch = Step::kOpen;
  return NodePath(std::move(steps));
}

bool NodePath::is_ancestor_or_self_of(const NodePath& other) const {
  const auto& a = steps_;
  const auto& b = other.steps_;
  if (a.size() > b.size()) return false;
  if (a.empty()) return true;
  const std::size_t last = a.size() - 1;
  if (!std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(last), b.begin())) return false;
  if (a[last].action != b[last].action) return false;
  if (a[last].branch == Step::kOpen) return true;
  return a[last].branch == b[last].branch;
}

std::uint64_t NodePath::hash() const {
  std::uint64_t h = hash_combine(0x51ed27aULL, steps_.size());
  for (const Step& s : steps_) {
    h = hash_combine(h, s.action);
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(s.branch)));
  }
  return h;
}

std::string NodePath::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i) os << ' ';
    os << steps_[i].action;
    if (steps_[i].branch != Step::kOpen) os << ':' << steps_[i].branch;
  }
  os << ']';
  return os.str();
}

Topology Topology::all_original() { return seeded(0, 1.0, "tau_Z"); }

Topology Topology::all_alternative() { return seeded(0, 0.0, "tau_O"); }

Topology Topology::seeded(std::uint64_t seed, double original_fraction, std::string label) {
  if (!(original_fraction >= 0.0 && original_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "original fraction must lie in [0, 1]");
  }
  Topology t;
  t.mode_ = Mode::Seeded;
  t.seed_ = seed;
  t.fraction_ = original_fraction;
  t.label_ = std::move(label);
  return t;
}

Topology Topology::explicit_bits(std::map<NodePath, bool> bits, std::string label) {
  Topology t;
  t.mode_ = Mode::Explicit;
  t.fraction_ = 0.0;
  t.bits_ = std::move(bits);
  t.label_ = std::move(label);
  return t;
}

bool Topology::beta(const NodePath& propagated) const {
  if (overrides_.contains(propagated)) return true;
  if (mode_ == Mode::Explicit) {
    const auto it = bits_.find(propagated);
    return it != bits_.end() && it->second;
  }
  if (fraction_ >= 1.0) return true;
  if (fraction_ <= 0.0) return false;
  return unit_interval(hash_combine(mix64(seed_), propagated.hash())) < fraction_;
}

bool Topology::effective_beta(const NodePath& propagated) const {
  const auto& steps = propagated.steps();
  for (std::size_t k = 1; k < steps.size(); ++k) {
    std::vector<Step> prefix(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(k));
    prefix.back().branch = Step::kOpen;
    if (!beta(NodePath(std::move(prefix)))) return false;
  }
  return beta(propagated);
}

Topology Topology::with_overrides(const std::set<NodePath>& paths, std::string label) const {
  Topology t = *this;
  t.overrides_.insert(paths.begin(), paths.end());
  t.label_ = std::move(label);
  return t;
}

json path_to_json(const NodePath& path) {
  json out = json::array();
  for (const Step& s : path.steps()) {
    if (s.branch == Step::kOpen) {
      out.push_back(json::array({s.action}));
    } else {
      out.push_back(json::array({s.action, s.branch}));
    }
  }
  return out;
}

NodePath path_from_json(const json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::InvalidArgument, "path: expected an array of steps");
  std::vector<Step> steps;
  for (const json& s : doc) {
    if (!s.is_array() || s.empty() || s.size() > 2) {
      throw Error(ErrorKind::InvalidArgument, "path: each step is [action] or [action, branch]");
    }
    Step step;
    step.action = s[0].get<std::uint32_t>();
    if (s.size() == 2) step.branch = s[1].get<std::int32_t>();
    steps.push_back(step);
  }
  return NodePath(std::move(steps));
}

json Topology::to_json() const {
  json overrides = json::array();
  for (const NodePath& p : overrides_) overrides.push_back(path_to_json(p));
  json doc{{"mode", mode_ == Mode::Seeded ? "seeded" : "explicit"},
           {"seed", seed_},
           {"fraction", fraction_},
           {"overrides", std::move(overrides)},
           {"label", label_}};
  if (mode_ == Mode::Explicit) {
    json bits = json::array();
    for (const auto& [path, bit] : bits_) bits.push_back(json{{"path", path_to_json(path)}, {"bit", bit ? 1 : 0}});
    doc["bits"] = std::move(bits);
  }
  return doc;
}

Topology Topology::from_json(const json& doc) {
  try {
    const std::string mode = doc.at("mode").get<std::string>();
    Topology t;
    if (mode == "seeded") {
      t = seeded(doc.at("seed").get<std::uint64_t>(), doc.at("fraction").get<double>(),
                 doc.value("label", std::string("seeded")));
    } else if (mode == "explicit") {
      std::map<NodePath, bool> bits;
      for (const json& e : doc.value("bits", json::array())) {
        bits[path_from_json(e.at("path"))] = e.at("bit").get<int>() != 0;
      }
      t = explicit_bits(std::move(bits), doc.value("label", std::string("custom")));
    } else {
      throw Error(ErrorKind::InvalidArgument, "mode: expected 'seeded' or 'explicit'");
    }
    for (const json& p : doc.value("overrides", json::array())) t.overrides_.insert(path_from_json(p));
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("topology: ") + e.what());
  }
}

Topology initial_topology(double fraction, std::uint64_t seed) {
  return Topology::seeded(seed, fraction, "initial");
}

Refinement refine(const Topology& topology, const std::set<NodePath>& alternative_nodes, std::size_t n,
                  Rng& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "flips per iteration must be >= 1");
  if (alternative_nodes.empty()) {
    throw Error(ErrorKind::NothingToFlip, "no alternative-regime nodes left in the evaluated tree");
  }
  std::set<NodePath> flipped;
  std::sample(alternative_nodes.begin(), alternative_nodes.end(),
              std::inserter(flipped, flipped.end()), std::min(n, alternative_nodes.size()), rng);
  std::string label = topology.label();
  if (label.rfind("tau_", 0) == 0 || label == "initial") label = "refined";
  return Refinement{topology.with_overrides(flipped, label), std::move(flipped)};
}

namespace {

/// All ancestors of `path` (posterior and propagated) plus `path` itself.
void collect_ancestors_or_self(const NodePath& path, std::set<NodePath>& out) {
  const auto& steps = path.steps();
  out.insert(NodePath());
  for (std::size_t k = 1; k <= steps.size(); ++k) {
    std::vector<Step> prefix(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(k));
    NodePath closed(prefix);
    prefix.back().branch = Step::kOpen;
    out.insert(NodePath(std::move(prefix)));
    if (closed.steps().back().branch != Step::kOpen) out.insert(std::move(closed));
  }
}

}  // namespace

std::set<NodePath> reusable_nodes(const std::set<NodePath>& flipped, const std::set<NodePath>& all_nodes) {
  if (flipped.empty()) return all_nodes;
  std::set<NodePath> above_flipped;  // ancestors-or-self of some flipped node
  for (const NodePath& f : flipped) collect_ancestors_or_self(f, above_flipped);
  std::set<NodePath> out;
  for (const NodePath& node : all_nodes) {
    if (above_flipped.contains(node)) continue;
    std::set<NodePath> chain;
    collect_ancestors_or_self(node, chain);
    const bool below_flipped =
        std::any_of(chain.begin(), chain.end(), [&](const NodePath& p) { return flipped.contains(p); });
    if (!below_flipped) out.insert(node);
  }
  return out;
}

}  // namespace aot
