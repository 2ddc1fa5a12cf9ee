#include "rxnkit/corpus_eval.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rxnkit/parallel.hpp"
#include "rxnkit/text_util.hpp"

namespace rxnkit {

namespace {

std::string line_path(std::size_t lineno) { return "line " + std::to_string(lineno); }

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

void add_row(std::ostringstream& os, std::string_view criterion, std::string_view scope,
             const PRF1& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-9s %-11s %7zu %7zu %7zu %9s %9s %9s\n",
                std::string(criterion).c_str(), std::string(scope).c_str(), c.tp, c.fp, c.fn,
                percent(c.precision()).c_str(), percent(c.recall()).c_str(),
                percent(c.f1()).c_str());
  os << buf;
}

json criterion_json(const CriterionReport& c) {
  json by_type = json::object();
  for (const auto& [type, counts] : c.by_type) by_type[std::string(to_string(type))] = to_json(counts);
  return json{{"overall", to_json(c.overall)}, {"by_type", std::move(by_type)}};
}

}  // namespace

std::vector<DiagramAnnotation> read_ground_truth_lines(std::istream& in) {
  std::vector<DiagramAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_ground_truth(line));
    } catch (const ParseError& e) {
      std::string message = e.what();
      if (!e.path().empty() && message.rfind(e.path() + ": ", 0) == 0) message.erase(0, e.path().size() + 2);
      throw ParseError(line_path(lineno) + (e.path().empty() ? "" : "." + e.path()), message);
    }
  }
  return out;
}

std::vector<PredictionRecord> read_prediction_lines(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = line_path(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where, std::string("malformed syntax: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(where, "expected object");
    PredictionRecord rec;
    auto id = j.find("image_id");
    if (id == j.end() || !id->is_string()) throw ParseError(where + ".image_id", "expected string");
    rec.image_id = id->get<std::string>();
    auto raw = j.find("raw");
    if (raw == j.end() || !raw->is_string()) throw ParseError(where + ".raw", "expected string");
    rec.raw = raw->get<std::string>();
    if (auto f = j.find("format"); f != j.end() && !f->is_null()) {
      if (!f->is_string()) throw ParseError(where + ".format", "expected string");
      rec.format = parse_format(f->get_ref<const std::string&>());
      if (!rec.format) throw ParseError(where + ".format", "unknown format");
    }
    if (auto s = j.find("sample_id"); s != j.end() && !s->is_null()) {
      rec.sample_id = s->is_string() ? s->get<std::string>() : s->dump();
    } else {
      rec.sample_id = std::to_string(out.size());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

MatchReport evaluate_corpus(const std::vector<DiagramAnnotation>& gts,
                            const std::vector<PredictionRecord>& preds,
                            const EvalOptions& options) {
  RewardSpec spec = RewardSpec::from_ratio(1, 1, options.iou_threshold, options.ned_threshold);

  std::unordered_map<std::string, std::size_t> gt_pos;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!gt_pos.emplace(gts[i].image_id, i).second) {
      throw CorpusError("duplicate image_id in ground truth: " + gts[i].image_id);
    }
  }
  std::vector<const PredictionRecord*> pred_for(gts.size(), nullptr);
  for (const auto& p : preds) {
    auto it = gt_pos.find(p.image_id);
    if (it == gt_pos.end()) {
      throw CorpusError("prediction for unknown image_id: " + p.image_id);
    }
    if (pred_for[it->second] != nullptr) {
      throw CorpusError("duplicate image_id in predictions: " + p.image_id);
    }
    if (!p.format && !options.default_format) {
      throw CorpusError("prediction for " + p.image_id + " has no format and no default is set");
    }
    pred_for[it->second] = &p;
  }

  std::vector<ImageOutcome> outcomes(gts.size());
  parallel_for(gts.size(), options.jobs, [&](std::size_t i) {
    const DiagramAnnotation& gt = gts[i];
    ImageOutcome& o = outcomes[i];
    o.image_id = gt.image_id;
    o.diagram_type = gt.diagram_type;
    o.soft.fn = o.hybrid.fn = gt.reactions.size();
    const PredictionRecord* p = pred_for[i];
    if (p == nullptr) return;
    o.predicted = true;
    const OutputFormat format = p->format ? *p->format : *options.default_format;
    PredictionParse parsed = parse_prediction(p->raw, format);
    const auto* pred = std::get_if<ParsedPrediction>(&parsed);
    if (pred == nullptr) return;
    o.parse_ok = true;
    IdentifierMap map;
    if (options.maps != nullptr) {
      if (auto it = options.maps->find(gt.image_id); it != options.maps->end()) {
        map = it->second.with_boxes_from(gt);
      } else {
        map = IdentifierMap::from_annotation(gt);
      }
    } else {
      map = IdentifierMap::from_annotation(gt);
    }
    const SampleScore s = score_prediction(*pred, gt, map, spec);
    o.soft = s.soft;
    o.hybrid = s.hybrid;
  });

  MatchReport report;
  report.images = gts.size();
  report.predictions = preds.size();
  for (const auto& o : outcomes) {
    if (o.predicted && !o.parse_ok) ++report.parse_failures;
    report.soft.overall += o.soft;
    report.hybrid.overall += o.hybrid;
    report.soft.by_type[o.diagram_type] += o.soft;
    report.hybrid.by_type[o.diagram_type] += o.hybrid;
  }
  report.per_image = std::move(outcomes);
  return report;
}

json to_json(const PRF1& c) {
  return json{{"tp", c.tp},
              {"fp", c.fp},
              {"fn", c.fn},
              {"precision", c.precision()},
              {"recall", c.recall()},
              {"f1", c.f1()}};
}

json to_json(const MatchReport& r, bool include_images) {
  json out{{"images", r.images},
           {"predictions", r.predictions},
           {"parse_failures", r.parse_failures},
           {"hybrid", criterion_json(r.hybrid)},
           {"soft", criterion_json(r.soft)}};
  if (include_images) {
    json images = json::array();
    for (const auto& o : r.per_image) {
      images.push_back(json{{"image_id", o.image_id},
                            {"diagram_type", std::string(to_string(o.diagram_type))},
                            {"predicted", o.predicted},
                            {"parse_ok", o.parse_ok},
                            {"hybrid", to_json(o.hybrid)},
                            {"soft", to_json(o.soft)}});
    }
    out["per_image"] = std::move(images);
  }
  return out;
}

std::string format_report(const MatchReport& r) {
  std::ostringstream os;
  os << "images: " << r.images << "  predictions: " << r.predictions
     << "  parse_failures: " << r.parse_failures << "\n\n";
  char header[160];
  std::snprintf(header, sizeof header, "%-9s %-11s %7s %7s %7s %9s %9s %9s\n", "criterion",
                "scope", "tp", "fp", "fn", "P(%)", "R(%)", "F1(%)");
  os << header;
  for (const auto& [name, c] : {std::pair<std::string_view, const CriterionReport*>{
                                    "hybrid", &r.hybrid},
                                {"soft", &r.soft}}) {
    add_row(os, name, "overall", c->overall);
    for (const auto& [type, counts] : c->by_type) add_row(os, name, to_string(type), counts);
  }
  return os.str();
}

}  // namespace rxnkit
