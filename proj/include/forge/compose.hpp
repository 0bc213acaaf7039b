#pragma once

// Builds a larger program out of small ones: each unit is embedded verbatim
// between heading comments, followed by a numbered dispatch table that calls
// the units in the requested order.

#include <string>
#include <vector>

#include "forge/artifact.hpp"

namespace forge {

struct UnitRange {
  std::string unit_id;
  std::string unit_name;
  std::size_t offset = 0;  // byte range of the unit body inside the composed body
  std::size_t length = 0;
};

struct CompositionRecord {
  std::string composed_artifact_id;
  std::vector<std::string> unit_ids;  // embedding order (as given)
  std::vector<std::size_t> call_order;  // indices into unit_ids
  std::string dispatch_style;
  std::vector<UnitRange> ranges;

  // The exact text of unit i as embedded.
  std::string extract(const std::string& composed_body, std::size_t i) const;
};

// Name used for a unit in headings and calls: last segment of the idea id
// (falls back to the first 8 hex digits of the artifact id).
std::string unit_name(const Artifact& unit);

// `order` is a permutation of [0, units.size()); empty means identity.
// Throws kPrecondition for fewer than two units and kInvalidArgument for
// mixed kinds or a bad permutation.
std::pair<Artifact, CompositionRecord> compose_large(const std::vector<Artifact>& units,
                                                     std::vector<std::size_t> order = {});

nlohmann::json to_json(const CompositionRecord& record);
CompositionRecord composition_from_json(const nlohmann::json& j);

}  // namespace forge
