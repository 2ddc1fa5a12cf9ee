#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rxnkit/reaction_model.hpp"

namespace rxnkit {

/// One detected molecule with its author-native identifiers. The box is
/// optional because detector label output may omit it; it can be filled in
/// from a ground-truth record by mol_index.
struct MapEntry {
  int mol_index = 0;
  std::optional<Box> bbox;
  std::vector<std::string> identifiers;
  bool is_virtual = false;

  friend bool operator==(const MapEntry&, const MapEntry&) = default;
};

/// Bijection between identifiers and molecules. Every molecule carries at
/// least one identifier and no identifier is shared between molecules.
class IdentifierMap {
 public:
  IdentifierMap() = default;

  /// Validates and indexes. Throws ParseError on duplicate mol_index,
  /// empty identifier lists or identifier collisions.
  static IdentifierMap from_entries(std::vector<MapEntry> entries);

  /// Map built from a ground-truth record. Molecules without identifiers
  /// receive virtual ones.
  static IdentifierMap from_annotation(const DiagramAnnotation& a);

  const std::vector<MapEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const MapEntry* find_identifier(std::string_view id) const;
  const MapEntry* find_index(int mol_index) const;

  /// Copy whose entries lacking a box take the box of the ground-truth
  /// molecule with the same mol_index.
  IdentifierMap with_boxes_from(const DiagramAnnotation& a) const;

  friend bool operator==(const IdentifierMap& a, const IdentifierMap& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<MapEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_identifier_;
  std::unordered_map<int, std::size_t> by_index_;
};

IdentifierMap map_from_json(const json& entries);
IdentifierMap load_map(std::string_view document);
json to_json(const IdentifierMap& m);

/// Reads a lines file of {"image_id": ..., "molecules": [...]} records.
std::map<std::string, IdentifierMap> load_map_lines(std::istream& in);

/// Gives every molecule in `unlabeled` a fresh identifier, flagged virtual.
/// When all existing identifiers are decimal numbers the numbering continues
/// from the maximum; otherwise "v1", "v2", ... are used, skipping collisions.
/// Unlabeled molecules absent from `existing` are appended without a box.
IdentifierMap assign_virtual_ids(std::vector<MapEntry> existing,
                                 const std::vector<int>& unlabeled);

struct Resolution {
  std::vector<BoxReaction> reactions;
  /// Per reaction, the handles that did not resolve to a boxed molecule.
  std::vector<std::vector<std::string>> unresolved;
};

/// Replaces identifiers (idtvp) or box indices (bivp) by the boxes of the
/// molecules they name. bros boxes pass through unchanged.
Resolution resolve(const ParsedPrediction& pred, const IdentifierMap& map);

}  // namespace rxnkit
