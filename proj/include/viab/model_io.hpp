#pragma once

#include <optional>
#include <string>

#include "viab/market_tree.hpp"

namespace viab {

// A parsed model document: the tree plus the optional attachments the file
// format carries (localizing sequence, payoff, cone).
struct ModelDocument {
  TreeModel model;
  std::optional<LocalizingSequence> localizing;
  std::optional<Payoff> payoff;
  std::optional<Cone> cone;
};

// Parses a UTF-8 JSON document. Throws SchemaError / InvariantError /
// InvalidStoppingTime with the offending node id and rule.
ModelDocument parse_model(const std::string& bytes);

// Canonical serialization: sorted keys, rationals as reduced "p/q" strings.
// parse_model(serialize_model(doc)) reproduces the document bit-exactly.
std::string serialize_model(const ModelDocument& doc);

ModelDocument load_model_file(const std::string& path);

}  // namespace viab
