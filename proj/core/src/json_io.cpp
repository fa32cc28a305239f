#include "fragmentor/json_io.hpp"

#include <fstream>
#include <sstream>

#include "fragmentor/errors.hpp"

namespace fragmentor {

Json SiteLabels::label(int site) const {
  const std::string& s = sites.label(site);
  if (numeric) return std::stoll(s);
  return s;
}

Json SiteLabels::atom(SiteMask atom) const {
  Json out = Json::array();
  for (SiteMask m = atom; m != 0; m &= m - 1) out.push_back(label(lowest_site(m)));
  return out;
}

Json SiteLabels::partition(const SetPartition& p) const {
  Json out = Json::array();
  for (SiteMask a : p.atoms()) out.push_back(atom(a));
  return out;
}

namespace {

std::string label_text(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ValidationError("site labels must be strings or integers, got " + j.dump());
}

}  // namespace

SiteMask SiteLabels::atom_from(const Json& j) const {
  if (!j.is_array() || j.empty()) throw ValidationError("an atom must be a nonempty array of site labels");
  SiteMask mask = 0;
  for (const Json& s : j) {
    const SiteMask bit = site_bit(sites.index_of(label_text(s)));
    if (mask & bit) throw ValidationError("site " + label_text(s) + " repeated in atom " + j.dump());
    mask |= bit;
  }
  return mask;
}

SetPartition SiteLabels::partition_from(const Json& j) const {
  if (!j.is_array() || j.empty()) {
    throw ValidationError("a partition must be a nonempty array of atoms, got " + j.dump());
  }
  std::vector<SiteMask> atoms;
  for (const Json& a : j) atoms.push_back(atom_from(a));
  return SetPartition::from_atoms(std::move(atoms));
}

SiteLabels site_labels_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("\"sites\" must be a nonempty array");
  std::vector<std::string> labels;
  bool numeric = true;
  for (const Json& s : j) {
    numeric = numeric && s.is_number_integer();
    labels.push_back(label_text(s));
  }
  return SiteLabels{SiteSet(std::move(labels)), numeric};
}

RateFamilyInput rate_family_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("model must be a JSON object");
  if (!j.contains("sites")) throw ValidationError("model is missing \"sites\"");
  if (!j.contains("rates")) throw ValidationError("model is missing \"rates\"");
  SiteLabels labels = site_labels_from_json(j.at("sites"));
  const Json& rates = j.at("rates");
  if (!rates.is_array()) throw ValidationError("\"rates\" must be an array");
  std::vector<RateEntry> entries;
  for (const Json& e : rates) {
    if (!e.is_object() || !e.contains("partition") || !e.contains("rate")) {
      throw ValidationError("each rate needs \"partition\" and \"rate\"");
    }
    if (!e.at("rate").is_number()) throw ValidationError("rate must be a number, got " + e.at("rate").dump());
    entries.push_back({labels.partition_from(e.at("partition")), e.at("rate").get<double>()});
  }
  RateFamily rho = RateFamily::create(labels.sites.universe(), std::move(entries));
  return RateFamilyInput{std::move(labels), std::move(rho)};
}

Json rate_family_to_json(const RateFamily& rho, const SiteLabels& labels) {
  Json sites = Json::array();
  for (int i = 0; i < labels.sites.size(); ++i) sites.push_back(labels.label(i));
  Json rates = Json::array();
  for (const RateEntry& e : rho.entries()) {
    rates.push_back(Json{{"partition", labels.partition(e.partition)}, {"rate", e.rate}});
  }
  return Json{{"sites", sites}, {"rates", rates}};
}

Measure measure_from_json(const Json& j, const SiteLabels& labels) {
  if (!j.is_object() || !j.contains("sizes") || !j.contains("weights")) {
    throw ValidationError("measure must be an object with \"sizes\" and \"weights\"");
  }
  const Json& sizes = j.at("sizes");
  if (!sizes.is_object()) throw ValidationError("\"sizes\" must map site labels to alphabet sizes");
  const int n = labels.sites.size();
  std::vector<int> per_site(static_cast<std::size_t>(n), 0);
  for (const auto& [key, value] : sizes.items()) {
    if (!value.is_number_integer()) throw ValidationError("alphabet size of site " + key + " must be an integer");
    per_site[static_cast<std::size_t>(labels.sites.index_of(key))] = value.get<int>();
  }
  for (int i = 0; i < n; ++i) {
    if (per_site[static_cast<std::size_t>(i)] == 0) {
      throw ValidationError("measure is missing the alphabet size of site " + labels.sites.label(i));
    }
  }
  const Json& weights = j.at("weights");
  if (!weights.is_array()) throw ValidationError("\"weights\" must be an array of numbers");
  std::vector<double> w;
  w.reserve(weights.size());
  for (const Json& x : weights) {
    if (!x.is_number()) throw ValidationError("weights must be numbers");
    w.push_back(x.get<double>());
  }
  return Measure::probability(AlphabetSpec::create(labels.sites.universe(), std::move(per_site)),
                              std::move(w));
}

Json measure_to_json(const Measure& mu, const SiteLabels& labels) {
  Json sizes = Json::object();
  for (SiteMask m = mu.carrier(); m != 0; m &= m - 1) {
    const int site = lowest_site(m);
    sizes[labels.sites.label(site)] = mu.spec().size_of(site);
  }
  Json weights = Json::array();
  for (double w : mu.weights()) weights.push_back(w);
  return Json{{"sizes", sizes}, {"weights", weights}};
}

namespace {

Json leaf_json(SiteMask atom, const SiteLabels& labels) {
  return Json{{"node", labels.partition(SetPartition::trivial(atom))},
              {"atom", labels.atom(atom)},
              {"children", Json::array()},
              {"leaf", true}};
}

Json node_json(const FragTree& tree, int index, const SiteLabels& labels) {
  const TreeNode& node = tree.base.node(static_cast<std::size_t>(index));
  Json children = Json::array();
  for (SiteMask a : node.partition.atoms()) {
    int split = -1;
    for (int c : node.children) {
      if (tree.base.node(static_cast<std::size_t>(c)).atom == a) split = c;
    }
    children.push_back(split >= 0 ? node_json(tree, split, labels) : leaf_json(a, labels));
  }
  const SiteMask atom = index == 0 ? tree.universe : node.atom;
  return Json{{"node", labels.partition(node.partition)},
              {"atom", labels.atom(atom)},
              {"children", children},
              {"leaf", false}};
}

}  // namespace

Json tree_to_json(const FragTree& tree, const SiteLabels& labels) {
  if (tree.degenerate()) return leaf_json(tree.universe, labels);
  return node_json(tree, 0, labels);
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + what + ": " + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), path);
}

}  // namespace fragmentor
