#include "rxnkit/crossmodal_join.hpp"

#include <algorithm>
#include <set>

#include "rxnkit/parallel.hpp"
#include "rxnkit/text_util.hpp"

namespace rxnkit::join {

namespace {

using refine::ojson;
using refine::Stage;
using refine::TextualRecord;

std::set<std::string> visual_ids(const std::vector<Component>& role) {
  std::set<std::string> out;
  for (const auto& c : role) {
    if (const auto* id = c.identifier()) out.insert(id->value);
  }
  return out;
}

std::size_t overlap(const std::set<std::string>& a, const std::vector<std::string>& b) {
  std::size_t n = 0;
  for (const auto& s : std::set<std::string>(b.begin(), b.end())) n += a.count(s);
  return n;
}

struct Field {
  std::string name;
  const std::optional<std::string>* value;
};

std::vector<Field> stage_fields(const Stage& s) {
  return {{"time", &s.time},
          {"temperature", &s.temperature},
          {"atmosphere", &s.atmosphere},
          {"pressure", &s.pressure},
          {"PH", &s.PH},
          {"stirring_speed", &s.stirring_speed},
          {"vacuum_condition", &s.vacuum_condition},
          {"light_condition", &s.light_condition},
          {"cooling_heating_condition", &s.cooling_heating_condition},
          {"workup", &s.workup}};
}

/// Candidate replacement strings in a fixed order: substance contents, then
/// stage fields stage by stage.
std::vector<std::string> refinement_candidates(const TextualRecord& t) {
  std::vector<std::string> out;
  if (!t.procedure) return out;
  for (const auto& s : t.procedure->substances) {
    if (s.content) out.push_back(normalize_text(*s.content));
  }
  for (const auto& st : t.procedure->stages) {
    for (const auto& f : stage_fields(st)) {
      if (*f.value) out.push_back(normalize_text(**f.value));
    }
  }
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

std::set<std::string> visual_texts(const Reaction& r) {
  std::set<std::string> out;
  for (Role role : kAllRoles) {
    for (const auto& c : r.role(role)) {
      if (const auto* t = c.text_value()) out.insert(*t);
    }
  }
  return out;
}

Component translate(const Component& c, const IdentifierMap* map, const std::string& path) {
  if (c.is_text() || c.identifier()) return c;
  if (const auto* i = c.box_index()) {
    const MapEntry* e = map ? map->find_index(i->value) : nullptr;
    if (!e) throw ParseError(path, "box index " + std::to_string(i->value) + " is not in the molecule map");
    return Component::molecule(Identifier{e->identifiers.front()});
  }
  throw ParseError(path, "box coordinates cannot be joined by identifier");
}

}  // namespace

std::vector<std::string> textual_products(const TextualRecord& t) {
  std::vector<std::string> out;
  if (t.id) out.push_back(normalize_text(*t.id));
  if (t.procedure) {
    for (const auto& p : t.procedure->products) {
      if (p.content && p.is_identifier.value_or(false)) out.push_back(normalize_text(*p.content));
    }
  }
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

std::vector<std::string> textual_reactants(const TextualRecord& t) {
  std::vector<std::string> out;
  if (!t.procedure) return out;
  for (auto idx : t.procedure->reactants) {
    for (const auto& s : t.procedure->substances) {
      if (s.idx == idx && s.content && s.is_identifier.value_or(false)) out.push_back(normalize_text(*s.content));
    }
  }
  return out;
}

JoinResult join(const std::vector<VisualReaction>& visual, const std::vector<TextualRecord>& textual) {
  std::vector<std::vector<std::string>> products, reactants;
  for (const auto& t : textual) {
    products.push_back(textual_products(t));
    reactants.push_back(textual_reactants(t));
  }
  JoinResult out;
  std::vector<bool> used(textual.size(), false);
  for (std::size_t v = 0; v < visual.size(); ++v) {
    const auto vp = visual_ids(visual[v].reaction.products);
    const auto vr = visual_ids(visual[v].reaction.reactants);
    std::optional<std::size_t> best;
    std::size_t best_overlap = 0;
    for (std::size_t t = 0; t < textual.size(); ++t) {
      if (overlap(vp, products[t]) == 0) continue;
      const std::size_t o = overlap(vr, reactants[t]);
      if (!best || o > best_overlap) {
        best = t;
        best_overlap = o;
      }
    }
    if (!best) {
      out.visual_orphans.push_back(v);
      continue;
    }
    used[*best] = true;
    out.joined.push_back(JoinedReaction{visual[v], best, {}, {}, {}});
  }
  for (std::size_t t = 0; t < textual.size(); ++t) {
    if (!used[t]) out.textual_orphans.push_back(t);
  }
  return out;
}

JoinedReaction refine_text(JoinedReaction j, const TextualRecord& t, double ned_gate) {
  const auto candidates = refinement_candidates(t);
  for (Role role : kAllRoles) {
    auto& comps = j.visual.reaction.role(role);
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string* text = comps[i].text_value();
      if (!text) continue;
      const std::string where = std::string(role_name(role)) + "[" + std::to_string(i) + "]";
      std::optional<std::string> nearest;
      double best = 1.0;
      for (const auto& c : candidates) {
        const double d = normalized_edit_distance(*text, c);
        if (!nearest || d < best) {
          nearest = c;
          best = d;
        }
      }
      if (nearest && best == 0.0) continue;
      if (nearest && best <= ned_gate) {
        j.refinements.push_back({where, *text, *nearest, best});
        comps[i] = Component::text(*nearest);
      } else {
        j.flags.push_back({where, *text, nearest, nearest ? best : 1.0});
      }
    }
  }
  return j;
}

JoinedReaction enrich(JoinedReaction j, const TextualRecord& t) {
  if (!t.procedure) return j;
  const auto shown = visual_texts(j.visual.reaction);
  const auto vp = visual_ids(j.visual.reaction.products);
  std::vector<Enrichment> out;
  const auto add = [&](const std::string& attribute, EnrichmentValue v) {
    v.value = normalize_text(v.value);
    if (v.value.empty() || shown.count(v.value)) return;
    auto it = std::find_if(out.begin(), out.end(), [&](const Enrichment& e) { return e.attribute == attribute; });
    if (it == out.end()) it = out.insert(out.end(), Enrichment{attribute, {}});
    it->values.push_back(std::move(v));
  };

  std::vector<const refine::Product*> matched;
  for (const auto& p : t.procedure->products) {
    if (p.content && p.is_identifier.value_or(false) && vp.count(normalize_text(*p.content))) matched.push_back(&p);
  }
  if (matched.empty() && !t.procedure->products.empty()) matched.push_back(&t.procedure->products.front());
  for (const char* attr : {"yield_ratio", "production", "appearance"}) {
    for (const auto* p : matched) {
      const auto& field = std::string_view(attr) == "yield_ratio" ? p->yield_ratio
                          : std::string_view(attr) == "production" ? p->production
                                                                   : p->appearance;
      if (field) add(attr, {*field, nullptr, p->content});
    }
  }
  for (const char* attr : {"time", "temperature", "atmosphere", "pressure"}) {
    for (const auto& st : t.procedure->stages) {
      for (const auto& f : stage_fields(st)) {
        if (f.name == attr && *f.value) add(attr, {**f.value, st.stage_id, std::nullopt});
      }
    }
  }
  j.enrichments = std::move(out);
  return j;
}

JoinResult run(const std::vector<VisualReaction>& visual, const std::vector<TextualRecord>& textual,
               double ned_gate, unsigned jobs) {
  JoinResult r = join(visual, textual);
  parallel_for(r.joined.size(), jobs, [&](std::size_t i) {
    auto& j = r.joined[i];
    const auto& t = textual[*j.textual];
    j = enrich(refine_text(std::move(j), t, ned_gate), t);
  });
  return r;
}

std::vector<VisualReaction> read_visual(std::istream& in) {
  std::vector<VisualReaction> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    const std::string at = "line " + std::to_string(n);
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(at, "not a JSON object");
    if (!j.contains("image_id") || !j["image_id"].is_string()) throw ParseError(at, "missing image_id");
    if (!j.contains("prediction")) throw ParseError(at, "missing prediction");
    OutputFormat format = OutputFormat::idtvp;
    if (j.contains("format")) {
      const auto f = j["format"].is_string() ? parse_format(j["format"].get<std::string>()) : std::nullopt;
      if (!f) throw ParseError(at + ".format", "unknown format");
      format = *f;
    }
    std::optional<IdentifierMap> map;
    if (j.contains("molecules")) map = map_from_json(j["molecules"]);
    const json& p = j["prediction"];
    const std::string raw = p.is_string() ? p.get<std::string>() : p.dump();
    auto parsed = parse_prediction(raw, format);
    if (const auto* f = std::get_if<ParseFailure>(&parsed)) {
      throw ParseError(at + ".prediction", std::string(to_string(f->failure)) + ": " + f->message);
    }
    const auto& pred = std::get<ParsedPrediction>(parsed);
    for (std::size_t r = 0; r < pred.reactions.size(); ++r) {
      VisualReaction v{j["image_id"].get<std::string>(), r, {}};
      for (Role role : kAllRoles) {
        for (const auto& c : pred.reactions[r].role(role)) {
          v.reaction.role(role).push_back(translate(c, map ? &*map : nullptr, at));
        }
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<TextualRecord> read_textual(std::istream& in) {
  std::vector<TextualRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    const ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("line " + std::to_string(n), "not a JSON object");
    try {
      out.push_back(refine::record_from_json(j));
    } catch (const refine::SchemaError& e) {
      throw ParseError("line " + std::to_string(n), e.what());
    }
  }
  return out;
}

json to_json(const JoinedReaction& j, const std::vector<TextualRecord>& textual) {
  json refinements = json::array();
  for (const auto& r : j.refinements) {
    refinements.push_back(
        {{"component", r.component}, {"original", r.original}, {"replacement", r.replacement}, {"ned", r.ned}});
  }
  json flags = json::array();
  for (const auto& f : j.flags) {
    flags.push_back({{"component", f.component},
                     {"text", f.text},
                     {"nearest", f.nearest ? json(*f.nearest) : json(nullptr)},
                     {"ned", f.ned}});
  }
  json enrichments = json::object();
  for (const auto& e : j.enrichments) {
    json values = json::array();
    for (const auto& v : e.values) {
      json item{{"value", v.value}};
      if (v.product) item["product"] = *v.product;
      else item["stage_id"] = json::parse(v.stage_id.dump());
      values.push_back(std::move(item));
    }
    enrichments[e.attribute] = std::move(values);
  }
  json out{{"image_id", j.visual.image_id}, {"reaction_index", j.visual.reaction_index}};
  if (j.textual) {
    const auto& t = textual[*j.textual];
    out["textual_index"] = *j.textual;
    out["textual_id"] = t.id ? json(*t.id) : json(nullptr);
  } else {
    out["textual_index"] = nullptr;
  }
  out["reaction"] = to_json(j.visual.reaction);
  out["refinements"] = std::move(refinements);
  out["low_confidence"] = std::move(flags);
  out["enrichments"] = std::move(enrichments);
  return out;
}

json orphan_report(const JoinResult& r, const std::vector<VisualReaction>& visual,
                   const std::vector<TextualRecord>& textual) {
  json v = json::array();
  for (auto i : r.visual_orphans) {
    v.push_back({{"image_id", visual[i].image_id}, {"reaction_index", visual[i].reaction_index}});
  }
  json t = json::array();
  for (auto i : r.textual_orphans) {
    t.push_back({{"textual_index", i}, {"id", textual[i].id ? json(*textual[i].id) : json(nullptr)}});
  }
  return json{{"joined", r.joined.size()}, {"visual_orphans", std::move(v)}, {"textual_orphans", std::move(t)}};
}

}  // namespace rxnkit::join
