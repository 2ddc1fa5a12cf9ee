#include "rxnkit/identifier_map.hpp"

#include <algorithm>
#include <set>

#include "rxnkit/text_util.hpp"

namespace rxnkit {

namespace {

bool is_decimal(std::string_view s) {
  return !s.empty() && s.size() <= 9 &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string entry_path(std::size_t i) { return "[" + std::to_string(i) + "]"; }

int read_mol_index(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string() && is_decimal(j.get_ref<const std::string&>())) {
    return std::stoi(j.get<std::string>());
  }
  throw ParseError(path, "expected integer mol_index");
}

}  // namespace

IdentifierMap IdentifierMap::from_entries(std::vector<MapEntry> entries) {
  IdentifierMap m;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    MapEntry& e = entries[i];
    const std::string path = entry_path(i);
    if (!m.by_index_.emplace(e.mol_index, i).second) {
      throw ParseError(path + ".mol_index", "duplicate mol_index " + std::to_string(e.mol_index));
    }
    if (e.identifiers.empty()) {
      throw ParseError(path + ".identifier", "empty identifier list");
    }
    for (auto& id : e.identifiers) {
      id = normalize_text(id);
      if (id.empty()) throw ParseError(path + ".identifier", "empty identifier");
      auto [pos, inserted] = m.by_identifier_.emplace(id, i);
      if (!inserted) {
        const int other = entries[pos->second].mol_index;
        throw ParseError(path + ".identifier",
                         other == e.mol_index
                             ? "identifier \"" + id + "\" listed twice"
                             : "identifier \"" + id + "\" collides with mol_index " +
                                   std::to_string(other));
      }
    }
    if (e.bbox && !e.bbox->valid()) {
      throw ParseError(path + ".bbox", "degenerate box");
    }
  }
  m.entries_ = std::move(entries);
  return m;
}

IdentifierMap IdentifierMap::from_annotation(const DiagramAnnotation& a) {
  std::vector<MapEntry> entries;
  std::vector<int> unlabeled;
  for (const auto& mol : a.molecules) {
    entries.push_back(MapEntry{mol.mol_index, mol.bbox, mol.identifiers, mol.is_virtual});
    if (mol.identifiers.empty()) unlabeled.push_back(mol.mol_index);
  }
  return assign_virtual_ids(std::move(entries), unlabeled);
}

const MapEntry* IdentifierMap::find_identifier(std::string_view id) const {
  auto it = by_identifier_.find(std::string(id));
  return it == by_identifier_.end() ? nullptr : &entries_[it->second];
}

const MapEntry* IdentifierMap::find_index(int mol_index) const {
  auto it = by_index_.find(mol_index);
  return it == by_index_.end() ? nullptr : &entries_[it->second];
}

IdentifierMap IdentifierMap::with_boxes_from(const DiagramAnnotation& a) const {
  IdentifierMap out = *this;
  for (auto& e : out.entries_) {
    if (e.bbox) continue;
    if (const auto* mol = a.find_molecule(e.mol_index)) e.bbox = mol->bbox;
  }
  return out;
}

IdentifierMap map_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("", "map must be an array of entries");
  std::vector<MapEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& ej = j[i];
    const std::string path = entry_path(i);
    if (!ej.is_object()) throw ParseError(path, "expected object");
    MapEntry e;
    auto idx = ej.find("mol_index");
    if (idx == ej.end()) throw ParseError(path + ".mol_index", "missing field");
    e.mol_index = read_mol_index(*idx, path + ".mol_index");

    auto ids = ej.find("identifier");
    if (ids == ej.end()) ids = ej.find("identifiers");
    if (ids != ej.end()) {
      if (ids->is_string()) {
        e.identifiers.push_back(ids->get<std::string>());
      } else if (ids->is_array()) {
        for (const auto& v : *ids) {
          if (!v.is_string()) throw ParseError(path + ".identifier", "expected strings");
          e.identifiers.push_back(v.get<std::string>());
        }
      } else if (!ids->is_null()) {
        throw ParseError(path + ".identifier", "expected array of strings");
      }
    }
    if (auto v = ej.find("is_virtual"); v != ej.end() && !v->is_null()) {
      if (!v->is_boolean()) throw ParseError(path + ".is_virtual", "expected boolean");
      e.is_virtual = v->get<bool>();
    }
    if (auto b = ej.find("bbox"); b != ej.end() && !b->is_null()) {
      if (!b->is_array() || b->size() != 4 ||
          !std::all_of(b->begin(), b->end(), [](const json& x) { return x.is_number(); })) {
        throw ParseError(path + ".bbox", "expected [x1, y1, x2, y2]");
      }
      e.bbox = Box{(*b)[0].get<double>(), (*b)[1].get<double>(), (*b)[2].get<double>(),
                   (*b)[3].get<double>()};
    }
    entries.push_back(std::move(e));
  }
  return IdentifierMap::from_entries(std::move(entries));
}

IdentifierMap load_map(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed syntax: ") + e.what());
  }
  return map_from_json(j);
}

json to_json(const IdentifierMap& m) {
  json out = json::array();
  for (const auto& e : m.entries()) {
    json ej{{"mol_index", e.mol_index}, {"identifier", e.identifiers}};
    if (e.bbox) ej["bbox"] = json::array({e.bbox->x1, e.bbox->y1, e.bbox->x2, e.bbox->y2});
    if (e.is_virtual) ej["is_virtual"] = true;
    out.push_back(std::move(ej));
  }
  return out;
}

std::map<std::string, IdentifierMap> load_map_lines(std::istream& in) {
  std::map<std::string, IdentifierMap> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where, std::string("malformed syntax: ") + e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string()) {
      throw ParseError(where, "expected {\"image_id\": ..., \"molecules\": [...]}");
    }
    const std::string image_id = j["image_id"].get<std::string>();
    const json* entries = nullptr;
    for (const char* key : {"molecules", "map", "entries"}) {
      if (auto it = j.find(key); it != j.end()) {
        entries = &*it;
        break;
      }
    }
    if (entries == nullptr) throw ParseError(where + ".molecules", "missing field");
    try {
      if (!out.emplace(image_id, map_from_json(*entries)).second) {
        throw ParseError(where + ".image_id", "duplicate image_id \"" + image_id + "\"");
      }
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

IdentifierMap assign_virtual_ids(std::vector<MapEntry> existing,
                                 const std::vector<int>& unlabeled) {
  std::set<std::string> taken;
  bool all_numeric = true;
  long long max_numeric = 0;
  for (const auto& e : existing) {
    for (const auto& id : e.identifiers) {
      taken.insert(id);
      if (is_decimal(id)) {
        max_numeric = std::max(max_numeric, std::stoll(id));
      } else {
        all_numeric = false;
      }
    }
  }

  long long next_numeric = max_numeric + 1;
  long long next_virtual = 1;
  const auto fresh = [&]() {
    if (all_numeric) {
      std::string id;
      do {
        id = std::to_string(next_numeric++);
      } while (taken.count(id) > 0);
      return id;
    }
    std::string id;
    do {
      id = "v" + std::to_string(next_virtual++);
    } while (taken.count(id) > 0);
    return id;
  };

  for (int mol_index : unlabeled) {
    auto it = std::find_if(existing.begin(), existing.end(),
                           [&](const MapEntry& e) { return e.mol_index == mol_index; });
    if (it != existing.end() && !it->identifiers.empty()) continue;
    std::string id = fresh();
    taken.insert(id);
    if (it == existing.end()) {
      existing.push_back(MapEntry{mol_index, std::nullopt, {std::move(id)}, true});
    } else {
      it->identifiers.push_back(std::move(id));
      it->is_virtual = true;
    }
  }
  return IdentifierMap::from_entries(std::move(existing));
}

Resolution resolve(const ParsedPrediction& pred, const IdentifierMap& map) {
  Resolution out;
  out.reactions.reserve(pred.reactions.size());
  for (const auto& r : pred.reactions) {
    BoxReaction br;
    for (Role role : kAllRoles) {
      auto& dst = br.role(role);
      for (const auto& c : r.role(role)) {
        if (const auto* t = c.text_value()) {
          dst.texts.push_back(*t);
          continue;
        }
        if (const auto* b = c.box()) {
          dst.molecules.push_back(*b);
          continue;
        }
        const MapEntry* e = nullptr;
        std::string handle;
        if (const auto* bi = c.box_index()) {
          e = map.find_index(bi->value);
          handle = "#" + std::to_string(bi->value);
        } else if (const auto* id = c.identifier()) {
          e = map.find_identifier(id->value);
          handle = id->value;
        }
        if (e != nullptr && e->bbox) {
          dst.molecules.push_back(*e->bbox);
        } else {
          br.unresolved.push_back(std::move(handle));
        }
      }
    }
    out.unresolved.push_back(br.unresolved);
    out.reactions.push_back(std::move(br));
  }
  return out;
}

}  // namespace rxnkit
