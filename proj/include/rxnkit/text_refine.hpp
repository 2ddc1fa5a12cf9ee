#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rxnkit::refine {

using ojson = nlohmann::ordered_json;

/// Thrown by record_from_json when a field has the wrong JSON type.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Substance {
  std::optional<std::int64_t> idx;
  std::optional<std::string> content;
  std::optional<std::string> amount;
  std::optional<std::string> chemical_name;
  std::optional<bool> is_identifier;
  std::optional<double> equivalence;
  std::optional<double> mmol;
  std::optional<std::string> role;
  /// Keys outside the substance schema, kept so validation can report them.
  std::vector<std::string> extraneous_keys;

  friend bool operator==(const Substance&, const Substance&) = default;
};

struct Product {
  std::optional<std::string> content, production, yield_ratio, conversion_rate,
      stereo_selectivity, ee, dr, rr, appearance, chemical_name;
  std::optional<bool> is_identifier;
  ojson extra = ojson::object();

  friend bool operator==(const Product&, const Product&) = default;
};

struct Stage {
  ojson stage_id;
  std::vector<std::int64_t> substances;
  std::optional<std::string> time, temperature, atmosphere, pressure, PH, stirring_speed,
      vacuum_condition, light_condition, cooling_heating_condition, workup;
  ojson extra = ojson::object();

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct Procedure {
  std::optional<std::string> paragraph;
  std::vector<Substance> substances;
  std::vector<std::int64_t> reactants, catalyst, reagents, solvent;
  std::vector<Product> products;
  std::vector<Stage> stages;

  friend bool operator==(const Procedure&, const Procedure&) = default;
};

enum class DependencyKind { title, id, iupac_name, method, last_compound };
inline constexpr std::string_view kLastCompound = "__last_compound__";

struct KeywordDependency {
  std::string keyword;
  DependencyKind kind = DependencyKind::title;

  friend bool operator==(const KeywordDependency&, const KeywordDependency&) = default;
};

/// Throws SchemaError unless `j` is a [keyword, kind] pair with a known kind;
/// the last_compound kind requires the sentinel keyword.
KeywordDependency dependency_from_json(const ojson& j);

struct TextualRecord {
  std::optional<std::string> title, id, iupac_name;
  std::optional<std::vector<KeywordDependency>> keyword;
  std::optional<Procedure> procedure;
  /// Other top-level keys (step_id, ...) in input order.
  ojson extra = ojson::object();

  friend bool operator==(const TextualRecord&, const TextualRecord&) = default;
};

TextualRecord record_from_json(const ojson& j);
ojson to_json(const TextualRecord& r);

enum class DropReason {
  malformed_json,
  schema_violation,
  missing_procedure,
  paragraph_too_short,
  empty_substances,
  empty_reactants,
  empty_products,
  missing_identifier,
  idx_discontinuous,
  missing_substance_fields,
  extraneous_substance_keys,
  invalid_role,
  dangling_idx_reference,
  yield_exceeds_100,
  role_unassignable,
};

std::string_view to_string(DropReason r);

/// Typographic cleanup of one text field: straight quotes, ASCII hyphens,
/// collapsed hyphen runs and spaces, bracketed carbon isotope labels.
std::string sanitize_text(std::string_view s);

/// First numeric token of a yield string, with or without a trailing %.
std::optional<double> parse_yield(std::string_view s);

/// All triggered reasons; empty means the record passes.
std::vector<DropReason> validate_record(const TextualRecord& r);

struct Change {
  std::string field;
  std::string rule;
  ojson before;
  ojson after;
};

struct Correction {
  TextualRecord record;
  std::vector<Change> changes;
  /// Set when a substance has neither a valid role nor array membership.
  std::optional<DropReason> drop;
};

/// Fills empty chemical names from content and makes the four role arrays a
/// partition of the substance idx set that agrees with every role attribute.
Correction autocorrect(const TextualRecord& r);

/// Sanitizes every text field and splits the record on " and " in the
/// iupac_name and product chemical names.
std::vector<TextualRecord> canonicalize_and_split(const TextualRecord& r);

struct RecordOutcome {
  std::size_t line = 0;
  std::vector<TextualRecord> standard;
  std::vector<DropReason> drop_reasons;
  std::string drop_detail;
  std::vector<Change> changes;
  bool dropped() const { return !drop_reasons.empty(); }
};

/// Runs one raw input line through validate, autocorrect and canonicalize.
RecordOutcome refine_line(std::string_view line, std::size_t line_number);

struct FunnelStats {
  std::size_t inputs = 0;
  std::size_t dropped = 0;
  std::size_t survivors = 0;
  std::size_t standard = 0;
};

/// Blank lines are skipped. Output order follows input order.
FunnelStats refine_stream(std::istream& in, std::ostream& standard, std::ostream& drops,
                          std::ostream& changelog, unsigned jobs = 1);

}  // namespace rxnkit::refine
