#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rxnkit {

using json = nlohmann::json;

/// Thrown for malformed ground-truth or map documents. `path()` names the
/// offending field, e.g. "reactions[0].products[1].ref".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Axis-aligned pixel box, corner pairs, origin top-left.
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2; }

  friend bool operator==(const Box&, const Box&) = default;
  friend auto operator<=>(const Box&, const Box&) = default;
};

struct BoxIndex {
  int value = 0;
  friend bool operator==(const BoxIndex&, const BoxIndex&) = default;
  friend auto operator<=>(const BoxIndex&, const BoxIndex&) = default;
};

struct Identifier {
  std::string value;
  friend bool operator==(const Identifier&, const Identifier&) = default;
  friend auto operator<=>(const Identifier&, const Identifier&) = default;
};

struct TextValue {
  std::string value;
  friend bool operator==(const TextValue&, const TextValue&) = default;
  friend auto operator<=>(const TextValue&, const TextValue&) = default;
};

enum class ComponentKind { molecule, text };

/// A reaction member: a molecule (by box, box index or identifier) or a text
/// string. Text is stored normalized (NFC, collapsed whitespace) so that
/// equality is plain payload equality.
class Component {
 public:
  using Payload = std::variant<Box, BoxIndex, Identifier, TextValue>;

  static Component molecule(Box b) { return Component(Payload{b}); }
  static Component molecule(BoxIndex i) { return Component(Payload{i}); }
  static Component molecule(Identifier id);
  static Component text(std::string_view s);

  ComponentKind kind() const {
    return std::holds_alternative<TextValue>(payload_) ? ComponentKind::text
                                                       : ComponentKind::molecule;
  }
  bool is_molecule() const { return kind() == ComponentKind::molecule; }
  bool is_text() const { return kind() == ComponentKind::text; }

  const Payload& payload() const { return payload_; }
  const Box* box() const { return std::get_if<Box>(&payload_); }
  const BoxIndex* box_index() const { return std::get_if<BoxIndex>(&payload_); }
  const Identifier* identifier() const { return std::get_if<Identifier>(&payload_); }
  const std::string* text_value() const {
    const auto* t = std::get_if<TextValue>(&payload_);
    return t ? &t->value : nullptr;
  }

  friend bool operator==(const Component&, const Component&) = default;
  friend bool operator<(const Component& a, const Component& b) {
    return a.payload_ < b.payload_;
  }

 private:
  explicit Component(Payload p) : payload_(std::move(p)) {}
  Payload payload_;
};

enum class Role { reactants, conditions, products };
inline constexpr Role kAllRoles[] = {Role::reactants, Role::conditions, Role::products};
std::string_view role_name(Role r);

struct Reaction {
  std::vector<Component> reactants;
  std::vector<Component> conditions;
  std::vector<Component> products;

  const std::vector<Component>& role(Role r) const;
  std::vector<Component>& role(Role r);

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

/// Removes intra-role duplicates, keeping first occurrences. Returns the
/// number of components removed.
std::size_t dedupe_roles(Reaction& r);

/// Reactants and products each hold at least one molecule.
bool has_required_molecules(const Reaction& r);

enum class DiagramType { single, multi_line, tree, cyclic, unknown };
std::string_view to_string(DiagramType t);
std::optional<DiagramType> parse_diagram_type(std::string_view s);

struct MoleculeEntry {
  int mol_index = 0;
  Box bbox;
  std::vector<std::string> identifiers;
  bool is_virtual = false;

  friend bool operator==(const MoleculeEntry&, const MoleculeEntry&) = default;
};

/// Ground-truth record for one diagram. Molecule components of reactions
/// keep the reference form used in the file: BoxIndex is a mol_index,
/// Identifier is one of a molecule's identifiers, Box is literal.
struct DiagramAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  DiagramType diagram_type = DiagramType::unknown;
  std::vector<MoleculeEntry> molecules;
  std::vector<Reaction> reactions;

  const MoleculeEntry* find_molecule(int mol_index) const;
  const MoleculeEntry* find_identifier(std::string_view id) const;

  friend bool operator==(const DiagramAnnotation&, const DiagramAnnotation&) = default;
};

DiagramAnnotation annotation_from_json(const json& j);
DiagramAnnotation parse_ground_truth(std::string_view document);
json to_json(const DiagramAnnotation& a);
std::string serialize_ground_truth(const DiagramAnnotation& a);

// ---------------------------------------------------------------------------
// Box space

struct RoleContents {
  std::vector<Box> molecules;
  std::vector<std::string> texts;
};

/// A reaction whose molecules have been mapped to boxes. Handles that could
/// not be mapped are listed in `unresolved`; such a reaction never matches.
struct BoxReaction {
  RoleContents reactants;
  RoleContents conditions;
  RoleContents products;
  std::vector<std::string> unresolved;

  bool resolved() const { return unresolved.empty(); }
  const RoleContents& role(Role r) const;
  RoleContents& role(Role r);
};

std::vector<BoxReaction> box_reactions(const DiagramAnnotation& a);

// ---------------------------------------------------------------------------
// Predictions

enum class OutputFormat { bros, bivp, idtvp };
std::string_view to_string(OutputFormat f);
std::optional<OutputFormat> parse_format(std::string_view s);

struct ParsedPrediction {
  OutputFormat format = OutputFormat::idtvp;
  std::vector<Reaction> reactions;
  bool raw_valid = true;
  std::vector<std::string> warnings;
};

enum class FailureClass { syntax, schema, empty };
std::string_view to_string(FailureClass c);

struct ParseFailure {
  FailureClass failure = FailureClass::syntax;
  std::string message;
};

using PredictionParse = std::variant<ParsedPrediction, ParseFailure>;

/// Parses raw model output. Never throws; a failure is returned as a value.
///
/// Accepted shapes: a JSON array of reactions, or an object with a
/// "reactions" array, optionally inside a markdown code fence. A reaction is
/// {"reactants": [...], "conditions": [...], "products": [...]} (conditions
/// optional). Components are {"type": "molecule", "ref": X},
/// {"type": "text", "value": S}, or a bare X as molecule shorthand, where X
/// is interpreted by format: bros a 4-number box, bivp an integer box index,
/// idtvp an identifier string (integers are read as their decimal string).
PredictionParse parse_prediction(std::string_view raw, OutputFormat format) noexcept;

json to_json(const Component& c);
json to_json(const Reaction& r);

/// Order-preserving serialization (the inverse of parse_prediction).
std::string serialize_prediction(const ParsedPrediction& p);

/// Deterministic serialization: components sorted within roles, reactions
/// sorted by (min reactant, min product) then by their serialized form.
std::string canonical_serialize(const ParsedPrediction& p);

/// Builds the prediction a perfect model would emit for `a` in `format`:
/// box-index refs become boxes (bros), mol_index (bivp) or the molecule's
/// first identifier (idtvp). Throws ParseError on unresolvable references.
ParsedPrediction to_prediction(const DiagramAnnotation& a, OutputFormat format);

}  // namespace rxnkit
