#pragma once

#include <nlohmann/json.hpp>

#include "fragmentor/partitions.hpp"
#include "fragmentor/process.hpp"
#include "fragmentor/recomb.hpp"
#include "fragmentor/trees.hpp"

namespace fragmentor {

using Json = nlohmann::ordered_json;

/// Site labels as read from input; labels given as JSON integers are echoed
/// back as integers.
struct SiteLabels {
  SiteSet sites;
  bool numeric = false;

  Json label(int site) const;
  Json atom(SiteMask atom) const;
  Json partition(const SetPartition& p) const;
  SiteMask atom_from(const Json& j) const;
  SetPartition partition_from(const Json& j) const;
};

SiteLabels site_labels_from_json(const Json& j);

struct RateFamilyInput {
  SiteLabels labels;
  RateFamily rates;
};

/// {"sites": [...], "rates": [{"partition": [[...]], "rate": r}, ...]}
RateFamilyInput rate_family_from_json(const Json& j);
Json rate_family_to_json(const RateFamily& rho, const SiteLabels& labels);

/// {"sizes": {label: |A|}, "weights": [...]}, row-major in site order.
Measure measure_from_json(const Json& j, const SiteLabels& labels);
Json measure_to_json(const Measure& mu, const SiteLabels& labels);

/// Nested {"node", "atom", "children", "leaf"} objects; the top object is the
/// root δ₀ on atom I (the degenerate tree is a single leaf on I).
Json tree_to_json(const FragTree& tree, const SiteLabels& labels);

/// Parses JSON text, turning parse failures into ValidationError.
Json parse_json(const std::string& text, const std::string& what);
Json read_json_file(const std::string& path);

}  // namespace fragmentor
