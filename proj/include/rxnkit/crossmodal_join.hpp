#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "rxnkit/identifier_map.hpp"
#include "rxnkit/reaction_model.hpp"
#include "rxnkit/text_refine.hpp"

namespace rxnkit::join {

/// A parsed diagram reaction whose molecules are identifier handles.
struct VisualReaction {
  std::string image_id;
  std::size_t reaction_index = 0;
  Reaction reaction;
};

struct Refinement {
  /// Role and position, e.g. "conditions[1]".
  std::string component;
  std::string original;
  std::string replacement;
  double ned = 0.0;
};

/// A visual text component whose nearest textual field lies beyond the gate.
struct LowConfidence {
  std::string component;
  std::string text;
  std::optional<std::string> nearest;
  double ned = 1.0;
};

struct EnrichmentValue {
  std::string value;
  /// Stage id for stage attributes, null for product attributes.
  refine::ojson stage_id;
  std::optional<std::string> product;
};

struct Enrichment {
  std::string attribute;
  std::vector<EnrichmentValue> values;
};

struct JoinedReaction {
  VisualReaction visual;
  /// Index into the textual list, absent when the reaction is an orphan.
  std::optional<std::size_t> textual;
  std::vector<Refinement> refinements;
  std::vector<LowConfidence> flags;
  std::vector<Enrichment> enrichments;
};

struct JoinResult {
  std::vector<JoinedReaction> joined;
  std::vector<std::size_t> visual_orphans;
  std::vector<std::size_t> textual_orphans;
};

/// Normalized identifiers a textual record names as its product: the record
/// id and every product content flagged as an identifier.
std::vector<std::string> textual_products(const refine::TextualRecord& t);

/// Identifier contents of the substances listed as reactants.
std::vector<std::string> textual_reactants(const refine::TextualRecord& t);

/// Each visual reaction joins the textual record whose product identifiers
/// intersect its own, preferring the largest reactant overlap and then the
/// earliest record. `joined` follows visual order and only holds joined
/// reactions; orphans on either side are listed by index.
JoinResult join(const std::vector<VisualReaction>& visual, const std::vector<refine::TextualRecord>& textual);

/// Replaces each visual text component by its nearest textual field when
/// 0 < ned <= gate, and flags it when ned > gate.
JoinedReaction refine_text(JoinedReaction j, const refine::TextualRecord& t, double ned_gate = 0.3);

/// Attaches product and stage attributes that the diagram does not already
/// show. The visual reaction is left as is.
JoinedReaction enrich(JoinedReaction j, const refine::TextualRecord& t);

/// join, then refine_text and enrich on every pair.
JoinResult run(const std::vector<VisualReaction>& visual, const std::vector<refine::TextualRecord>& textual,
               double ned_gate = 0.3, unsigned jobs = 1);

/// Visual lines: {image_id, prediction, format?, molecules?}. prediction is
/// raw model output or a reactions array. bivp predictions need molecules
/// (identifier map entries) to translate box indices into identifiers.
std::vector<VisualReaction> read_visual(std::istream& in);
std::vector<refine::TextualRecord> read_textual(std::istream& in);

json to_json(const JoinedReaction& j, const std::vector<refine::TextualRecord>& textual);
json orphan_report(const JoinResult& r, const std::vector<VisualReaction>& visual,
                   const std::vector<refine::TextualRecord>& textual);

}  // namespace rxnkit::join
