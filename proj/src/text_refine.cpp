#include "rxnkit/text_refine.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <regex>
#include <set>

#include "rxnkit/parallel.hpp"
#include "rxnkit/text_util.hpp"

namespace rxnkit::refine {

namespace {

template <typename T>
using Field = std::optional<std::string> T::*;

constexpr std::array<std::pair<std::string_view, Field<Product>>, 10> kProductText{{
    {"content", &Product::content},
    {"production", &Product::production},
    {"yield_ratio", &Product::yield_ratio},
    {"conversion_rate", &Product::conversion_rate},
    {"stereo_selectivity", &Product::stereo_selectivity},
    {"ee", &Product::ee},
    {"dr", &Product::dr},
    {"rr", &Product::rr},
    {"appearance", &Product::appearance},
    {"chemical_name", &Product::chemical_name},
}};

constexpr std::array<std::pair<std::string_view, Field<Stage>>, 10> kStageText{{
    {"time", &Stage::time},
    {"temperature", &Stage::temperature},
    {"atmosphere", &Stage::atmosphere},
    {"pressure", &Stage::pressure},
    {"PH", &Stage::PH},
    {"stirring_speed", &Stage::stirring_speed},
    {"vacuum_condition", &Stage::vacuum_condition},
    {"light_condition", &Stage::light_condition},
    {"cooling_heating_condition", &Stage::cooling_heating_condition},
    {"workup", &Stage::workup},
}};

constexpr std::array<std::string_view, 4> kRoles = {"reactant", "catalyst", "reagent", "solvent"};
constexpr std::array<std::string_view, 4> kRoleArrays = {"reactants", "catalyst", "reagents", "solvent"};
constexpr std::array<std::vector<std::int64_t> Procedure::*, 4> kRoleMembers = {
    &Procedure::reactants, &Procedure::catalyst, &Procedure::reagents, &Procedure::solvent};

constexpr std::array<std::string_view, 5> kDependencyKinds = {"title", "id", "iupac_name", "method",
                                                              "last_compound"};

std::optional<std::string> opt_string(const ojson& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw SchemaError(path + " must be a string");
  return j.get<std::string>();
}

std::optional<double> opt_number(const ojson& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) throw SchemaError(path + " must be a number");
  return j.get<double>();
}

std::optional<bool> opt_bool(const ojson& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_boolean()) throw SchemaError(path + " must be a boolean");
  return j.get<bool>();
}

std::vector<std::int64_t> idx_list(const ojson& j, const std::string& path) {
  std::vector<std::int64_t> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw SchemaError(path + " must be an array of idx pointers");
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw SchemaError(path + " must contain integers only");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

const ojson& array_of_objects(const ojson& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + " must be an array");
  for (const auto& v : j) {
    if (!v.is_object()) throw SchemaError(path + " must contain objects only");
  }
  return j;
}

Substance substance_from_json(const ojson& j, const std::string& path) {
  Substance s;
  for (const auto& [key, v] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "idx") {
      if (!v.is_number_integer()) throw SchemaError(p + " must be an integer");
      s.idx = v.get<std::int64_t>();
    } else if (key == "content") {
      s.content = opt_string(v, p);
    } else if (key == "amount") {
      s.amount = opt_string(v, p);
    } else if (key == "chemical_name") {
      s.chemical_name = opt_string(v, p);
    } else if (key == "is_identifier") {
      s.is_identifier = opt_bool(v, p);
    } else if (key == "equivalence") {
      s.equivalence = opt_number(v, p);
    } else if (key == "mmol") {
      s.mmol = opt_number(v, p);
    } else if (key == "role") {
      s.role = opt_string(v, p);
    } else {
      s.extraneous_keys.push_back(key);
    }
  }
  return s;
}

Product product_from_json(const ojson& j, const std::string& path) {
  Product p;
  for (const auto& [key, v] : j.items()) {
    auto it = std::find_if(kProductText.begin(), kProductText.end(),
                           [&](const auto& f) { return f.first == key; });
    if (it != kProductText.end()) {
      p.*(it->second) = opt_string(v, path + "." + key);
    } else if (key == "is_identifier") {
      p.is_identifier = opt_bool(v, path + "." + key);
    } else {
      p.extra[key] = v;
    }
  }
  return p;
}

Stage stage_from_json(const ojson& j, const std::string& path) {
  Stage s;
  for (const auto& [key, v] : j.items()) {
    auto it = std::find_if(kStageText.begin(), kStageText.end(),
                           [&](const auto& f) { return f.first == key; });
    if (it != kStageText.end()) {
      s.*(it->second) = opt_string(v, path + "." + key);
    } else if (key == "stage_id") {
      s.stage_id = v;
    } else if (key == "substances") {
      s.substances = idx_list(v, path + ".substances");
    } else {
      s.extra[key] = v;
    }
  }
  return s;
}

Procedure procedure_from_json(const ojson& j) {
  Procedure p;
  for (const auto& [key, v] : j.items()) {
    const std::string path = "procedure." + key;
    if (key == "paragraph") {
      p.paragraph = opt_string(v, path);
    } else if (key == "substances") {
      if (v.is_null()) continue;
      std::size_t i = 0;
      for (const auto& s : array_of_objects(v, path)) {
        p.substances.push_back(substance_from_json(s, path + "[" + std::to_string(i++) + "]"));
      }
    } else if (key == "products") {
      if (v.is_null()) continue;
      std::size_t i = 0;
      for (const auto& s : array_of_objects(v, path)) {
        p.products.push_back(product_from_json(s, path + "[" + std::to_string(i++) + "]"));
      }
    } else if (key == "stages") {
      if (v.is_null()) continue;
      std::size_t i = 0;
      for (const auto& s : array_of_objects(v, path)) {
        p.stages.push_back(stage_from_json(s, path + "[" + std::to_string(i++) + "]"));
      }
    } else {
      auto it = std::find(kRoleArrays.begin(), kRoleArrays.end(), key);
      if (it == kRoleArrays.end()) throw SchemaError("unknown procedure field \"" + key + "\"");
      p.*kRoleMembers[static_cast<std::size_t>(it - kRoleArrays.begin())] = idx_list(v, path);
    }
  }
  return p;
}

void put(ojson& out, std::string_view key, const std::optional<std::string>& v) {
  if (v) out[std::string(key)] = *v;
}

ojson to_json(const Substance& s) {
  ojson out = ojson::object();
  if (s.idx) out["idx"] = *s.idx;
  put(out, "content", s.content);
  put(out, "amount", s.amount);
  put(out, "chemical_name", s.chemical_name);
  if (s.is_identifier) out["is_identifier"] = *s.is_identifier;
  if (s.equivalence) out["equivalence"] = *s.equivalence;
  if (s.mmol) out["mmol"] = *s.mmol;
  put(out, "role", s.role);
  return out;
}

ojson to_json(const Product& p) {
  ojson out = ojson::object();
  for (const auto& [name, member] : kProductText) put(out, name, p.*member);
  if (p.is_identifier) out["is_identifier"] = *p.is_identifier;
  for (const auto& [k, v] : p.extra.items()) out[k] = v;
  return out;
}

ojson to_json(const Stage& s) {
  ojson out = ojson::object();
  if (!s.stage_id.is_null()) out["stage_id"] = s.stage_id;
  out["substances"] = s.substances;
  for (const auto& [name, member] : kStageText) put(out, name, s.*member);
  for (const auto& [k, v] : s.extra.items()) out[k] = v;
  return out;
}

std::string sanitized(const std::optional<std::string>& s) {
  return s ? sanitize_text(*s) : std::string();
}

std::optional<std::size_t> role_slot(std::string_view role) {
  auto it = std::find(kRoles.begin(), kRoles.end(), role);
  if (it == kRoles.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kRoles.begin());
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
  });
}

std::vector<std::string> conjuncts(const std::string& s) {
  static constexpr std::string_view kAnd = " and ";
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos = s.find(kAnd); pos != std::string::npos; pos = s.find(kAnd, start)) {
    parts.push_back(s.substr(start, pos - start));
    start = pos + kAnd.size();
  }
  parts.push_back(s.substr(start));
  if (parts.size() < 2 || !std::all_of(parts.begin(), parts.end(), has_alnum)) return {s};
  return parts;
}

void sanitize_field(std::optional<std::string>& s) {
  if (s) s = sanitize_text(*s);
}

std::vector<std::optional<std::string>*> fission_fields(TextualRecord& r) {
  std::vector<std::optional<std::string>*> out{&r.iupac_name};
  if (r.procedure) {
    for (auto& p : r.procedure->products) out.push_back(&p.chemical_name);
  }
  return out;
}

void split_into(const TextualRecord& r, std::vector<TextualRecord>& out) {
  TextualRecord probe = r;
  std::vector<std::vector<std::string>> parts;
  std::size_t n = 1;
  for (auto* f : fission_fields(probe)) {
    parts.push_back(*f ? conjuncts(**f) : std::vector<std::string>{});
    if (n == 1 && parts.back().size() > 1) n = parts.back().size();
  }
  if (n == 1) {
    out.push_back(r);
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    TextualRecord copy = r;
    const auto fields = fission_fields(copy);
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (parts[k].size() == n) *fields[k] = parts[k][j];
    }
    split_into(copy, out);
  }
}

ojson changes_json(const std::vector<Change>& changes, std::size_t line,
                   const std::optional<std::string>& id) {
  ojson out = ojson::array();
  for (const auto& c : changes) {
    ojson j{{"line", line}};
    j["id"] = id ? ojson(*id) : ojson(nullptr);
    j["field"] = c.field;
    j["rule"] = c.rule;
    j["before"] = c.before;
    j["after"] = c.after;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

KeywordDependency dependency_from_json(const ojson& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_string()) {
    throw SchemaError("keyword entries must be [keyword, kind] string pairs");
  }
  const std::string kind = j[1].get<std::string>();
  auto it = std::find(kDependencyKinds.begin(), kDependencyKinds.end(), kind);
  if (it == kDependencyKinds.end()) throw SchemaError("unknown keyword kind \"" + kind + "\"");
  KeywordDependency d{j[0].get<std::string>(),
                      static_cast<DependencyKind>(it - kDependencyKinds.begin())};
  if ((d.kind == DependencyKind::last_compound) != (d.keyword == kLastCompound)) {
    throw SchemaError("the last_compound kind pairs only with " + std::string(kLastCompound));
  }
  return d;
}

TextualRecord record_from_json(const ojson& j) {
  if (!j.is_object()) throw SchemaError("record must be a JSON object");
  TextualRecord r;
  for (const auto& [key, v] : j.items()) {
    if (key == "title") {
      r.title = opt_string(v, key);
    } else if (key == "id") {
      r.id = opt_string(v, key);
    } else if (key == "iupac_name") {
      r.iupac_name = opt_string(v, key);
    } else if (key == "keyword") {
      if (v.is_null()) continue;
      if (!v.is_array()) throw SchemaError("keyword must be an array");
      r.keyword.emplace();
      for (const auto& d : v) r.keyword->push_back(dependency_from_json(d));
    } else if (key == "procedure") {
      // a plain-text procedure has not been structured yet
      if (v.is_object()) r.procedure = procedure_from_json(v);
    } else {
      r.extra[key] = v;
    }
  }
  return r;
}

ojson to_json(const TextualRecord& r) {
  ojson out = ojson::object();
  put(out, "title", r.title);
  put(out, "id", r.id);
  put(out, "iupac_name", r.iupac_name);
  for (const auto& [k, v] : r.extra.items()) out[k] = v;
  if (r.keyword) {
    ojson deps = ojson::array();
    for (const auto& d : *r.keyword) {
      deps.push_back({d.keyword, kDependencyKinds[static_cast<std::size_t>(d.kind)]});
    }
    out["keyword"] = std::move(deps);
  }
  if (r.procedure) {
    const Procedure& p = *r.procedure;
    ojson proc = ojson::object();
    put(proc, "paragraph", p.paragraph);
    proc["substances"] = ojson::array();
    for (const auto& s : p.substances) proc["substances"].push_back(to_json(s));
    for (std::size_t k = 0; k < kRoleArrays.size(); ++k) {
      proc[std::string(kRoleArrays[k])] = p.*kRoleMembers[k];
    }
    proc["products"] = ojson::array();
    for (const auto& s : p.products) proc["products"].push_back(to_json(s));
    proc["stages"] = ojson::array();
    for (const auto& s : p.stages) proc["stages"].push_back(to_json(s));
    out["procedure"] = std::move(proc);
  }
  return out;
}

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::malformed_json: return "malformed_json";
    case DropReason::schema_violation: return "schema_violation";
    case DropReason::missing_procedure: return "missing_procedure";
    case DropReason::paragraph_too_short: return "paragraph_too_short";
    case DropReason::empty_substances: return "empty_substances";
    case DropReason::empty_reactants: return "empty_reactants";
    case DropReason::empty_products: return "empty_products";
    case DropReason::missing_identifier: return "missing_identifier";
    case DropReason::idx_discontinuous: return "idx_discontinuous";
    case DropReason::missing_substance_fields: return "missing_substance_fields";
    case DropReason::extraneous_substance_keys: return "extraneous_substance_keys";
    case DropReason::invalid_role: return "invalid_role";
    case DropReason::dangling_idx_reference: return "dangling_idx_reference";
    case DropReason::yield_exceeds_100: return "yield_exceeds_100";
    case DropReason::role_unassignable: return "role_unassignable";
  }
  return "unknown";
}

std::string sanitize_text(std::string_view in) {
  std::string s(in);
  for (std::string_view q : {"‘", "’", "‚", "‛", "′"}) replace_all(s, q, "'");
  for (std::string_view q : {"“", "”", "„", "‟", "″"}) replace_all(s, q, "\"");
  for (std::string_view h : {"‐", "‑"}) replace_all(s, h, "-");
  for (std::string_view sp : {" ", " "}) replace_all(s, sp, " ");
  s = normalize_text(s);

  std::string collapsed;
  collapsed.reserve(s.size());
  for (char c : s) {
    if (c == '-' && !collapsed.empty() && collapsed.back() == '-') continue;
    collapsed.push_back(c);
  }
  for (std::size_t pos = collapsed.find(" - "); pos != std::string::npos;
       pos = collapsed.find(" - ", pos)) {
    collapsed.replace(pos, 3, " ");
  }

  static constexpr std::string_view kLabel = "C-labeled";
  for (std::size_t pos = collapsed.rfind(kLabel); pos != std::string::npos;
       pos = pos == 0 ? std::string::npos : collapsed.rfind(kLabel, pos - 1)) {
    std::size_t start = pos;
    while (start > 0 && std::isdigit(static_cast<unsigned char>(collapsed[start - 1]))) --start;
    if (start == pos || (start > 0 && collapsed[start - 1] == '[')) continue;
    collapsed.insert(pos + 1, "]");
    collapsed.insert(start, "[");
    pos = start;
  }
  return collapsed;
}

std::optional<double> parse_yield(std::string_view s) {
  static const std::regex number(R"(([0-9]+(?:\.[0-9]+)?))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(s.begin(), s.end(), m, number)) return std::nullopt;
  return std::stod(m[1].str());
}

std::vector<DropReason> validate_record(const TextualRecord& r) {
  std::set<DropReason> reasons;
  if (sanitized(r.id).empty() && sanitized(r.iupac_name).empty()) {
    reasons.insert(DropReason::missing_identifier);
  }
  if (!r.procedure) {
    reasons.insert(DropReason::missing_procedure);
    return {reasons.begin(), reasons.end()};
  }
  const Procedure& p = *r.procedure;
  if (!p.paragraph) {
    reasons.insert(DropReason::missing_procedure);
  } else if (split_whitespace(sanitize_text(*p.paragraph)).size() < 3) {
    reasons.insert(DropReason::paragraph_too_short);
  }
  if (p.substances.empty()) reasons.insert(DropReason::empty_substances);
  if (p.reactants.empty()) reasons.insert(DropReason::empty_reactants);
  if (p.products.empty()) reasons.insert(DropReason::empty_products);

  bool all_idx = true;
  std::set<std::int64_t> known;
  for (std::size_t i = 0; i < p.substances.size(); ++i) {
    const Substance& s = p.substances[i];
    if (!s.idx || sanitized(s.content).empty()) reasons.insert(DropReason::missing_substance_fields);
    if (!s.extraneous_keys.empty()) reasons.insert(DropReason::extraneous_substance_keys);
    const std::string role = sanitized(s.role);
    if (!role.empty() && !role_slot(role)) reasons.insert(DropReason::invalid_role);
    if (!s.idx) {
      all_idx = false;
      continue;
    }
    known.insert(*s.idx);
    if (*s.idx != static_cast<std::int64_t>(i)) reasons.insert(DropReason::idx_discontinuous);
  }
  if (all_idx) {
    const auto dangling = [&](const std::vector<std::int64_t>& refs) {
      return std::any_of(refs.begin(), refs.end(), [&](std::int64_t v) { return !known.count(v); });
    };
    bool bad = false;
    for (auto member : kRoleMembers) bad |= dangling(p.*member);
    for (const auto& st : p.stages) bad |= dangling(st.substances);
    if (bad) reasons.insert(DropReason::dangling_idx_reference);
  }
  for (const auto& prod : p.products) {
    if (!prod.yield_ratio) continue;
    if (auto y = parse_yield(*prod.yield_ratio); y && *y > 100.0) {
      reasons.insert(DropReason::yield_exceeds_100);
    }
  }
  return {reasons.begin(), reasons.end()};
}

Correction autocorrect(const TextualRecord& r) {
  Correction out{r, {}, std::nullopt};
  if (!out.record.procedure) return out;
  Procedure& p = *out.record.procedure;

  for (std::size_t i = 0; i < p.substances.size(); ++i) {
    Substance& s = p.substances[i];
    if (sanitized(s.chemical_name).empty() && s.content) {
      out.changes.push_back({"procedure.substances[" + std::to_string(i) + "].chemical_name",
                             "fill_chemical_name",
                             s.chemical_name ? ojson(*s.chemical_name) : ojson(nullptr), *s.content});
      s.chemical_name = s.content;
    }
  }

  std::array<std::vector<std::int64_t>, 4> before;
  for (std::size_t k = 0; k < 4; ++k) before[k] = p.*kRoleMembers[k];
  std::array<std::vector<std::int64_t>, 4> after;
  std::vector<std::pair<std::int64_t, std::size_t>> appended;

  for (std::size_t i = 0; i < p.substances.size(); ++i) {
    Substance& s = p.substances[i];
    if (!s.idx) continue;
    const std::int64_t idx = *s.idx;
    std::vector<std::size_t> member_of;
    for (std::size_t k = 0; k < 4; ++k) {
      if (std::find(before[k].begin(), before[k].end(), idx) != before[k].end()) member_of.push_back(k);
    }
    const auto attr = role_slot(sanitized(s.role));
    std::size_t chosen = 0;
    if (member_of.empty()) {
      if (!attr) {
        out.drop = DropReason::role_unassignable;
        continue;
      }
      chosen = *attr;
      appended.emplace_back(idx, chosen);
    } else if (attr && std::find(member_of.begin(), member_of.end(), *attr) != member_of.end()) {
      chosen = *attr;
    } else {
      chosen = member_of.front();
    }
    if (!attr || *attr != chosen) {
      const std::string role(kRoles[chosen]);
      out.changes.push_back({"procedure.substances[" + std::to_string(i) + "].role", "role_from_array",
                             s.role ? ojson(*s.role) : ojson(nullptr), role});
      s.role = role;
    }
    // keep the first occurrence in the chosen array only
    for (std::size_t k = 0; k < 4; ++k) {
      if (k == chosen) continue;
      auto& arr = p.*kRoleMembers[k];
      arr.erase(std::remove(arr.begin(), arr.end(), idx), arr.end());
    }
    auto& arr = p.*kRoleMembers[chosen];
    auto first = std::find(arr.begin(), arr.end(), idx);
    if (first != arr.end()) arr.erase(std::remove(first + 1, arr.end(), idx), arr.end());
  }
  for (const auto& [idx, k] : appended) (p.*kRoleMembers[k]).push_back(idx);
  for (std::size_t k = 0; k < 4; ++k) {
    after[k] = p.*kRoleMembers[k];
    if (after[k] != before[k]) {
      out.changes.push_back({"procedure." + std::string(kRoleArrays[k]), "role_alignment", before[k], after[k]});
    }
  }
  return out;
}

std::vector<TextualRecord> canonicalize_and_split(const TextualRecord& r) {
  TextualRecord c = r;
  sanitize_field(c.title);
  sanitize_field(c.id);
  sanitize_field(c.iupac_name);
  if (c.keyword) {
    for (auto& d : *c.keyword) d.keyword = sanitize_text(d.keyword);
  }
  if (c.procedure) {
    Procedure& p = *c.procedure;
    sanitize_field(p.paragraph);
    for (auto& s : p.substances) {
      sanitize_field(s.content);
      sanitize_field(s.amount);
      sanitize_field(s.chemical_name);
      sanitize_field(s.role);
    }
    for (auto& prod : p.products) {
      for (const auto& [name, member] : kProductText) sanitize_field(prod.*member);
    }
    for (auto& st : p.stages) {
      for (const auto& [name, member] : kStageText) sanitize_field(st.*member);
    }
  }
  std::vector<TextualRecord> out;
  split_into(c, out);
  return out;
}

RecordOutcome refine_line(std::string_view line, std::size_t line_number) {
  RecordOutcome out;
  out.line = line_number;
  const ojson j = ojson::parse(line, nullptr, false);
  if (j.is_discarded()) {
    out.drop_reasons = {DropReason::malformed_json};
    out.drop_detail = "line is not valid JSON";
    return out;
  }
  TextualRecord record;
  try {
    record = record_from_json(j);
  } catch (const std::exception& e) {
    out.drop_reasons = {DropReason::schema_violation};
    out.drop_detail = e.what();
    return out;
  }
  out.drop_reasons = validate_record(record);
  if (out.dropped()) return out;

  Correction corrected = autocorrect(record);
  if (corrected.drop) {
    out.drop_reasons = {*corrected.drop};
    out.drop_detail = "substance has neither a role nor a role array";
    return out;
  }
  out.changes = std::move(corrected.changes);
  out.standard = canonicalize_and_split(corrected.record);
  if (out.standard.size() > 1) {
    out.changes.push_back({"record", "fission", 1, out.standard.size()});
  }
  return out;
}

FunnelStats refine_stream(std::istream& in, std::ostream& standard, std::ostream& drops,
                          std::ostream& changelog, unsigned jobs) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    lines.emplace_back(n, line);
  }
  std::vector<RecordOutcome> outcomes(lines.size());
  parallel_for(lines.size(), jobs, [&](std::size_t i) {
    outcomes[i] = refine_line(lines[i].second, lines[i].first);
  });

  FunnelStats stats;
  stats.inputs = outcomes.size();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const RecordOutcome& o = outcomes[i];
    if (o.dropped()) {
      ++stats.dropped;
      ojson d{{"line", o.line}};
      const ojson raw = ojson::parse(lines[i].second, nullptr, false);
      d["id"] = raw.is_object() && raw.contains("id") ? raw["id"] : ojson(nullptr);
      d["title"] = raw.is_object() && raw.contains("title") ? raw["title"] : ojson(nullptr);
      d["reasons"] = ojson::array();
      for (auto r : o.drop_reasons) d["reasons"].push_back(to_string(r));
      if (!o.drop_detail.empty()) d["detail"] = o.drop_detail;
      drops << d.dump() << '\n';
      continue;
    }
    ++stats.survivors;
    stats.standard += o.standard.size();
    for (const auto& r : o.standard) standard << to_json(r).dump() << '\n';
    const std::optional<std::string> id = o.standard.empty() ? std::nullopt : o.standard.front().id;
    for (const auto& c : changes_json(o.changes, o.line, id)) changelog << c.dump() << '\n';
  }
  return stats;
}

}  // namespace rxnkit::refine
