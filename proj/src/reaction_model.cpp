#include "rxnkit/reaction_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <limits>
#include <unordered_map>

#include "rxnkit/text_util.hpp"

namespace rxnkit {

namespace {

std::string sub(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

json number_json(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.0e15) {
    return json(static_cast<std::int64_t>(v));
  }
  return json(v);
}

json box_json(const Box& b) {
  return json::array({number_json(b.x1), number_json(b.y1), number_json(b.x2),
                      number_json(b.y2)});
}

bool is_box_array(const json& j) {
  return j.is_array() && j.size() == 4 &&
         std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); });
}

Box read_box(const json& j, const std::string& path) {
  if (!is_box_array(j)) {
    throw ParseError(path, "expected [x1, y1, x2, y2]");
  }
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    throw ParseError(path, "non-finite coordinate");
  }
  if (b.x2 <= b.x1 || b.y2 <= b.y1) {
    throw ParseError(path, "degenerate box (x2 <= x1 or y2 <= y1)");
  }
  if (b.x1 < 0 || b.y1 < 0) {
    throw ParseError(path, "negative coordinate");
  }
  return b;
}

const json& require(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(sub(path, key), "missing field");
  }
  return *it;
}

int read_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) {
    auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ParseError(path, "integer out of range");
    }
    return static_cast<int>(v);
  }
  if (j.is_number_float()) {
    double d = j.get<double>();
    if (std::floor(d) == d && std::fabs(d) < 2.0e9) return static_cast<int>(d);
  }
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (!s.empty() && s.size() < 10 &&
        std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::stoi(s);
    }
  }
  throw ParseError(path, "expected integer");
}

std::string dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

// Scans for bracket nesting outside of string literals.
std::size_t max_nesting(std::string_view s) {
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (char c : s) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      max_depth = std::max(max_depth, ++depth);
    } else if ((c == ']' || c == '}') && depth > 0) {
      --depth;
    }
  }
  return max_depth;
}

std::string_view strip_code_fence(std::string_view s) {
  const auto open = s.find("```");
  if (open == std::string_view::npos) return s;
  auto body_start = s.find('\n', open);
  if (body_start == std::string_view::npos) return {};
  ++body_start;
  const auto close = s.find("```", body_start);
  return s.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                              : close - body_start);
}

constexpr std::size_t kMaxNesting = 64;

struct SchemaError {
  std::string message;
};

Component prediction_molecule(const json& ref, OutputFormat format, const std::string& path) {
  switch (format) {
    case OutputFormat::bros: {
      if (!is_box_array(ref)) throw SchemaError{path + ": bros molecule must be a box"};
      Box b{ref[0].get<double>(), ref[1].get<double>(), ref[2].get<double>(),
            ref[3].get<double>()};
      if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
          !std::isfinite(b.y2) || !b.valid()) {
        throw SchemaError{path + ": invalid box"};
      }
      return Component::molecule(b);
    }
    case OutputFormat::bivp: {
      if (ref.is_number_integer()) {
        auto v = ref.get<std::int64_t>();
        if (v < 0 || v > std::numeric_limits<int>::max()) {
          throw SchemaError{path + ": box index out of range"};
        }
        return Component::molecule(BoxIndex{static_cast<int>(v)});
      }
      if (ref.is_string()) {
        const std::string s = trim(ref.get_ref<const std::string&>());
        if (!s.empty() && s.size() < 10 &&
            std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
          return Component::molecule(BoxIndex{std::stoi(s)});
        }
      }
      throw SchemaError{path + ": bivp molecule must be a box index"};
    }
    case OutputFormat::idtvp: {
      if (ref.is_number_integer()) {
        return Component::molecule(Identifier{std::to_string(ref.get<std::int64_t>())});
      }
      if (ref.is_string()) {
        std::string s = normalize_text(ref.get_ref<const std::string&>());
        if (s.empty()) throw SchemaError{path + ": empty identifier"};
        return Component::molecule(Identifier{std::move(s)});
      }
      throw SchemaError{path + ": idtvp molecule must be an identifier"};
    }
  }
  throw SchemaError{path + ": unknown format"};
}

// Returns nullopt for components that are dropped (empty text).
std::optional<Component> prediction_component(const json& c, OutputFormat format,
                                               const std::string& path) {
  if (c.is_object()) {
    auto type = c.find("type");
    if (type == c.end() || !type->is_string()) {
      throw SchemaError{path + ": component missing \"type\""};
    }
    const auto& t = type->get_ref<const std::string&>();
    if (t == "molecule") {
      auto ref = c.find("ref");
      if (ref == c.end()) throw SchemaError{path + ": molecule missing \"ref\""};
      return prediction_molecule(*ref, format, path + ".ref");
    }
    if (t == "text") {
      auto value = c.find("value");
      if (value == c.end() || !value->is_string()) {
        throw SchemaError{path + ": text missing string \"value\""};
      }
      Component comp = Component::text(value->get_ref<const std::string&>());
      if (comp.text_value()->empty()) return std::nullopt;
      return comp;
    }
    throw SchemaError{path + ": unknown component type \"" + t + "\""};
  }
  return prediction_molecule(c, format, path);
}

ParsedPrediction prediction_from_json(const json& root, OutputFormat format) {
  const json* list = nullptr;
  if (root.is_array()) {
    list = &root;
  } else if (root.is_object()) {
    auto it = root.find("reactions");
    if (it != root.end() && it->is_array()) list = &*it;
  }
  if (list == nullptr) {
    throw SchemaError{"expected an array of reactions or {\"reactions\": [...]}"};
  }

  ParsedPrediction out;
  out.format = format;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& rj = (*list)[i];
    const std::string rpath = at("reactions", i);
    if (!rj.is_object()) throw SchemaError{rpath + ": reaction must be an object"};
    Reaction r;
    for (Role role : kAllRoles) {
      const std::string key(role_name(role));
      auto it = rj.find(key);
      if (it == rj.end() || it->is_null()) {
        if (role == Role::conditions) continue;
        throw SchemaError{rpath + ": missing \"" + key + "\""};
      }
      if (!it->is_array()) throw SchemaError{rpath + "." + key + ": expected array"};
      std::size_t dropped = 0;
      for (std::size_t k = 0; k < it->size(); ++k) {
        auto comp = prediction_component((*it)[k], format, at(rpath + "." + key, k));
        if (comp) {
          r.role(role).push_back(std::move(*comp));
        } else {
          ++dropped;
        }
      }
      if (dropped > 0) {
        out.warnings.push_back(rpath + "." + key + ": dropped " + std::to_string(dropped) +
                               " empty text component(s)");
      }
    }
    if (const std::size_t removed = dedupe_roles(r); removed > 0) {
      out.warnings.push_back(rpath + ": removed " + std::to_string(removed) +
                             " duplicate component(s)");
    }
    if (!has_required_molecules(r)) {
      throw SchemaError{rpath + ": reactants and products need at least one molecule"};
    }
    out.reactions.push_back(std::move(r));
  }
  return out;
}

Component gt_component(const json& c, const DiagramAnnotation& a, const std::string& path) {
  if (!c.is_object()) throw ParseError(path, "component must be an object");
  const json& type = require(c, "type", path);
  if (!type.is_string()) throw ParseError(sub(path, "type"), "expected string");
  const auto& t = type.get_ref<const std::string&>();
  if (t == "text") {
    const json& value = require(c, "value", path);
    if (!value.is_string()) throw ParseError(sub(path, "value"), "expected string");
    return Component::text(value.get_ref<const std::string&>());
  }
  if (t != "molecule") {
    throw ParseError(sub(path, "type"), "unknown component type \"" + t + "\"");
  }
  const json& ref = require(c, "ref", path);
  const std::string rpath = sub(path, "ref");
  if (ref.is_number_integer()) {
    const int idx = read_int(ref, rpath);
    if (a.find_molecule(idx) == nullptr) {
      throw ParseError(rpath, "dangling reference to mol_index " + std::to_string(idx));
    }
    return Component::molecule(BoxIndex{idx});
  }
  if (ref.is_string()) {
    std::string id = normalize_text(ref.get_ref<const std::string&>());
    if (id.empty()) throw ParseError(rpath, "empty identifier");
    if (a.find_identifier(id) == nullptr) {
      throw ParseError(rpath, "dangling reference to identifier \"" + id + "\"");
    }
    return Component::molecule(Identifier{std::move(id)});
  }
  Box b = read_box(ref, rpath);
  if (b.x2 > a.width || b.y2 > a.height) {
    throw ParseError(rpath, "box outside image bounds");
  }
  return Component::molecule(b);
}


}  // namespace

Component Component::molecule(Identifier id) { return Component(Payload{std::move(id)}); }

Component Component::text(std::string_view s) {
  return Component(Payload{TextValue{normalize_text(s)}});
}

std::string_view role_name(Role r) {
  switch (r) {
    case Role::reactants:
      return "reactants";
    case Role::conditions:
      return "conditions";
    case Role::products:
      return "products";
  }
  return "?";
}

const std::vector<Component>& Reaction::role(Role r) const {
  switch (r) {
    case Role::reactants:
      return reactants;
    case Role::conditions:
      return conditions;
    case Role::products:
      return products;
  }
  return reactants;
}

std::vector<Component>& Reaction::role(Role r) {
  return const_cast<std::vector<Component>&>(std::as_const(*this).role(r));
}

std::size_t dedupe_roles(Reaction& r) {
  std::size_t removed = 0;
  for (Role role : kAllRoles) {
    auto& v = r.role(role);
    std::vector<Component> kept;
    kept.reserve(v.size());
    for (auto& c : v) {
      if (std::find(kept.begin(), kept.end(), c) == kept.end()) {
        kept.push_back(std::move(c));
      } else {
        ++removed;
      }
    }
    v = std::move(kept);
  }
  return removed;
}

bool has_required_molecules(const Reaction& r) {
  auto has_mol = [](const std::vector<Component>& v) {
    return std::any_of(v.begin(), v.end(), [](const Component& c) { return c.is_molecule(); });
  };
  return has_mol(r.reactants) && has_mol(r.products);
}

std::string_view to_string(DiagramType t) {
  switch (t) {
    case DiagramType::single:
      return "single";
    case DiagramType::multi_line:
      return "multi_line";
    case DiagramType::tree:
      return "tree";
    case DiagramType::cyclic:
      return "cyclic";
    case DiagramType::unknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<DiagramType> parse_diagram_type(std::string_view s) {
  if (s == "single") return DiagramType::single;
  if (s == "multi_line" || s == "multi-line") return DiagramType::multi_line;
  if (s == "tree") return DiagramType::tree;
  if (s == "cyclic") return DiagramType::cyclic;
  if (s == "unknown") return DiagramType::unknown;
  return std::nullopt;
}

const MoleculeEntry* DiagramAnnotation::find_molecule(int mol_index) const {
  for (const auto& m : molecules) {
    if (m.mol_index == mol_index) return &m;
  }
  return nullptr;
}

const MoleculeEntry* DiagramAnnotation::find_identifier(std::string_view id) const {
  for (const auto& m : molecules) {
    if (std::find(m.identifiers.begin(), m.identifiers.end(), id) != m.identifiers.end()) {
      return &m;
    }
  }
  return nullptr;
}

DiagramAnnotation annotation_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("", "record must be an object");
  DiagramAnnotation a;

  const json& image_id = require(j, "image_id", "");
  if (!image_id.is_string() || image_id.get_ref<const std::string&>().empty()) {
    throw ParseError("image_id", "expected non-empty string");
  }
  a.image_id = image_id.get<std::string>();
  a.width = read_int(require(j, "width", ""), "width");
  a.height = read_int(require(j, "height", ""), "height");
  if (a.width <= 0) throw ParseError("width", "must be positive");
  if (a.height <= 0) throw ParseError("height", "must be positive");

  if (auto it = j.find("diagram_type"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("diagram_type", "expected string");
    auto t = parse_diagram_type(it->get_ref<const std::string&>());
    if (!t) throw ParseError("diagram_type", "unknown diagram type");
    a.diagram_type = *t;
  }

  const json& mols = require(j, "molecules", "");
  if (!mols.is_array()) throw ParseError("molecules", "expected array");
  std::set<int> seen_index;
  std::unordered_map<std::string, int> seen_id;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    const std::string path = at("molecules", i);
    const json& mj = mols[i];
    if (!mj.is_object()) throw ParseError(path, "expected object");
    MoleculeEntry m;
    m.mol_index = read_int(require(mj, "mol_index", path), sub(path, "mol_index"));
    if (!seen_index.insert(m.mol_index).second) {
      throw ParseError(sub(path, "mol_index"),
                       "duplicate mol_index " + std::to_string(m.mol_index));
    }
    m.bbox = read_box(require(mj, "bbox", path), sub(path, "bbox"));
    if (m.bbox.x2 > a.width || m.bbox.y2 > a.height) {
      throw ParseError(sub(path, "bbox"), "box outside image bounds");
    }
    if (auto it = mj.find("identifiers"); it != mj.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(sub(path, "identifiers"), "expected array");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string ipath = at(sub(path, "identifiers"), k);
        if (!(*it)[k].is_string()) throw ParseError(ipath, "expected string");
        std::string id = normalize_text((*it)[k].get_ref<const std::string&>());
        if (id.empty()) throw ParseError(ipath, "empty identifier");
        auto [pos, inserted] = seen_id.emplace(id, m.mol_index);
        if (!inserted && pos->second != m.mol_index) {
          throw ParseError(ipath, "identifier \"" + id + "\" also used by mol_index " +
                                      std::to_string(pos->second));
        }
        if (inserted) m.identifiers.push_back(std::move(id));
      }
    }
    if (auto it = mj.find("is_virtual"); it != mj.end() && !it->is_null()) {
      if (!it->is_boolean()) throw ParseError(sub(path, "is_virtual"), "expected boolean");
      m.is_virtual = it->get<bool>();
    }
    a.molecules.push_back(std::move(m));
  }

  const json& rxns = require(j, "reactions", "");
  if (!rxns.is_array()) throw ParseError("reactions", "expected array");
  for (std::size_t i = 0; i < rxns.size(); ++i) {
    const std::string path = at("reactions", i);
    const json& rj = rxns[i];
    if (!rj.is_object()) throw ParseError(path, "expected object");
    Reaction r;
    for (Role role : kAllRoles) {
      const std::string key(role_name(role));
      auto it = rj.find(key);
      if (it == rj.end() || it->is_null()) {
        if (role == Role::conditions) continue;
        throw ParseError(sub(path, key), "missing field");
      }
      if (!it->is_array()) throw ParseError(sub(path, key), "expected array");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string cpath = at(sub(path, key), k);
        Component c = gt_component((*it)[k], a, cpath);
        auto& members = r.role(role);
        if (std::find(members.begin(), members.end(), c) != members.end()) {
          throw ParseError(cpath, "duplicate component within role");
        }
        members.push_back(std::move(c));
      }
    }
    if (!has_required_molecules(r)) {
      throw ParseError(path, "reactants and products need at least one molecule");
    }
    a.reactions.push_back(std::move(r));
  }
  return a;
}

DiagramAnnotation parse_ground_truth(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed syntax: ") + e.what());
  }
  return annotation_from_json(j);
}

json to_json(const Component& c) {
  if (const auto* t = c.text_value()) {
    return json{{"type", "text"}, {"value", *t}};
  }
  json ref;
  if (const auto* b = c.box()) {
    ref = box_json(*b);
  } else if (const auto* i = c.box_index()) {
    ref = i->value;
  } else {
    ref = c.identifier()->value;
  }
  return json{{"type", "molecule"}, {"ref", std::move(ref)}};
}

json to_json(const Reaction& r) {
  json out = json::object();
  for (Role role : kAllRoles) {
    json arr = json::array();
    for (const auto& c : r.role(role)) arr.push_back(to_json(c));
    out[std::string(role_name(role))] = std::move(arr);
  }
  return out;
}

json to_json(const DiagramAnnotation& a) {
  json mols = json::array();
  for (const auto& m : a.molecules) {
    mols.push_back(json{{"mol_index", m.mol_index},
                        {"bbox", box_json(m.bbox)},
                        {"identifiers", m.identifiers},
                        {"is_virtual", m.is_virtual}});
  }
  json rxns = json::array();
  for (const auto& r : a.reactions) rxns.push_back(to_json(r));
  json out{{"image_id", a.image_id},
           {"width", a.width},
           {"height", a.height},
           {"molecules", std::move(mols)},
           {"reactions", std::move(rxns)}};
  if (a.diagram_type != DiagramType::unknown) {
    out["diagram_type"] = std::string(to_string(a.diagram_type));
  }
  return out;
}

std::string serialize_ground_truth(const DiagramAnnotation& a) { return dump(to_json(a)); }

const RoleContents& BoxReaction::role(Role r) const {
  switch (r) {
    case Role::reactants:
      return reactants;
    case Role::conditions:
      return conditions;
    case Role::products:
      return products;
  }
  return reactants;
}

RoleContents& BoxReaction::role(Role r) {
  return const_cast<RoleContents&>(std::as_const(*this).role(r));
}

std::vector<BoxReaction> box_reactions(const DiagramAnnotation& a) {
  std::vector<BoxReaction> out;
  out.reserve(a.reactions.size());
  for (const auto& r : a.reactions) {
    BoxReaction br;
    for (Role role : kAllRoles) {
      auto& dst = br.role(role);
      for (const auto& c : r.role(role)) {
        if (const auto* t = c.text_value()) {
          dst.texts.push_back(*t);
        } else if (const auto* b = c.box()) {
          dst.molecules.push_back(*b);
        } else if (const auto* i = c.box_index()) {
          if (const auto* m = a.find_molecule(i->value)) {
            dst.molecules.push_back(m->bbox);
          } else {
            br.unresolved.push_back("#" + std::to_string(i->value));
          }
        } else if (const auto* id = c.identifier()) {
          if (const auto* m = a.find_identifier(id->value)) {
            dst.molecules.push_back(m->bbox);
          } else {
            br.unresolved.push_back(id->value);
          }
        }
      }
    }
    out.push_back(std::move(br));
  }
  return out;
}

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::bros:
      return "bros";
    case OutputFormat::bivp:
      return "bivp";
    case OutputFormat::idtvp:
      return "idtvp";
  }
  return "?";
}

std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "bros" || s == "BROS") return OutputFormat::bros;
  if (s == "bivp" || s == "BIVP") return OutputFormat::bivp;
  if (s == "idtvp" || s == "IdtVP" || s == "IDTVP") return OutputFormat::idtvp;
  return std::nullopt;
}

std::string_view to_string(FailureClass c) {
  switch (c) {
    case FailureClass::syntax:
      return "syntax";
    case FailureClass::schema:
      return "schema";
    case FailureClass::empty:
      return "empty";
  }
  return "?";
}

PredictionParse parse_prediction(std::string_view raw, OutputFormat format) noexcept {
  try {
    const std::string trimmed = trim(raw);
    const std::string body = trim(strip_code_fence(trimmed));
    if (body.empty()) {
      return ParseFailure{FailureClass::empty, "empty output"};
    }
    if (max_nesting(body) > kMaxNesting) {
      return ParseFailure{FailureClass::syntax, "nesting too deep"};
    }
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      return ParseFailure{FailureClass::syntax, e.what()};
    }
    try {
      return prediction_from_json(j, format);
    } catch (const SchemaError& e) {
      return ParseFailure{FailureClass::schema, e.message};
    } catch (const json::exception& e) {
      return ParseFailure{FailureClass::schema, e.what()};
    }
  } catch (const std::exception& e) {
    return ParseFailure{FailureClass::syntax, e.what()};
  } catch (...) {
    return ParseFailure{FailureClass::syntax, "unknown error"};
  }
}

std::string serialize_prediction(const ParsedPrediction& p) {
  json rxns = json::array();
  for (const auto& r : p.reactions) rxns.push_back(to_json(r));
  return dump(json{{"format", std::string(to_string(p.format))}, {"reactions", std::move(rxns)}});
}

std::string canonical_serialize(const ParsedPrediction& p) {
  struct Keyed {
    Reaction reaction;
    std::string text;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(p.reactions.size());
  for (Reaction r : p.reactions) {
    dedupe_roles(r);
    for (Role role : kAllRoles) std::sort(r.role(role).begin(), r.role(role).end());
    std::string text = dump(to_json(r));
    keyed.push_back({std::move(r), std::move(text)});
  }
  const auto front_or_null = [](const std::vector<Component>& v) -> const Component* {
    return v.empty() ? nullptr : &v.front();
  };
  const auto less_opt = [](const Component* a, const Component* b) {
    if (a == nullptr || b == nullptr) return a == nullptr && b != nullptr;
    return *a < *b;
  };
  std::sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
    const Component* ar = front_or_null(a.reaction.reactants);
    const Component* br = front_or_null(b.reaction.reactants);
    if (less_opt(ar, br)) return true;
    if (less_opt(br, ar)) return false;
    const Component* ap = front_or_null(a.reaction.products);
    const Component* bp = front_or_null(b.reaction.products);
    if (less_opt(ap, bp)) return true;
    if (less_opt(bp, ap)) return false;
    return a.text < b.text;
  });
  json rxns = json::array();
  for (const auto& k : keyed) rxns.push_back(to_json(k.reaction));
  return dump(json{{"format", std::string(to_string(p.format))}, {"reactions", std::move(rxns)}});
}

ParsedPrediction to_prediction(const DiagramAnnotation& a, OutputFormat format) {
  ParsedPrediction out;
  out.format = format;
  for (std::size_t i = 0; i < a.reactions.size(); ++i) {
    Reaction r;
    for (Role role : kAllRoles) {
      for (const auto& c : a.reactions[i].role(role)) {
        if (c.is_text()) {
          r.role(role).push_back(c);
          continue;
        }
        const MoleculeEntry* m = nullptr;
        if (const auto* bi = c.box_index()) {
          m = a.find_molecule(bi->value);
        } else if (const auto* id = c.identifier()) {
          m = a.find_identifier(id->value);
        } else if (const auto* b = c.box()) {
          if (format == OutputFormat::bros) {
            r.role(role).push_back(c);
            continue;
          }
          for (const auto& cand : a.molecules) {
            if (cand.bbox == *b) m = &cand;
          }
        }
        const std::string path = at("reactions", i) + "." + std::string(role_name(role));
        if (m == nullptr) throw ParseError(path, "unresolvable molecule reference");
        switch (format) {
          case OutputFormat::bros:
            r.role(role).push_back(Component::molecule(m->bbox));
            break;
          case OutputFormat::bivp:
            r.role(role).push_back(Component::molecule(BoxIndex{m->mol_index}));
            break;
          case OutputFormat::idtvp:
            if (m->identifiers.empty()) {
              throw ParseError(path, "molecule " + std::to_string(m->mol_index) +
                                         " has no identifier");
            }
            r.role(role).push_back(Component::molecule(Identifier{m->identifiers.front()}));
            break;
        }
      }
    }
    dedupe_roles(r);
    out.reactions.push_back(std::move(r));
  }
  return out;
}

}  // namespace rxnkit
