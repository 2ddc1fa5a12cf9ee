#include "rxnkit/serialization_analyzer.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "rxnkit/bipartite.hpp"
#include "rxnkit/parallel.hpp"

namespace rxnkit {

OrderOutcome order_inconsistency(const ParsedPrediction& pred, const DiagramAnnotation& gt, const IdentifierMap& map,
                                 const MatchConfig& cfg) {
  MatchConfig hybrid = cfg;
  hybrid.criterion = Criterion::hybrid;
  hybrid.validate();
  OrderOutcome out;
  const auto gts = box_reactions(gt);
  const auto preds = resolve(pred, map).reactions;
  out.reactions = gts.size();
  if (preds.size() != gts.size()) return out;
  for (const auto& p : preds) {
    if (!p.resolved()) return out;
  }
  const std::size_t n = gts.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, kForbidden));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (reaction_matches(preds[i], gts[j], pred.format, hybrid)) cost[i][j] = i == j ? 0.0 : 1.0;
    }
  }
  const auto assignment = min_cost_assignment(cost);
  if (!assignment) return out;
  out.perfect = true;
  for (std::size_t i = 0; i < n; ++i) {
    if ((*assignment)[i] != static_cast<int>(i)) ++out.misplacements;
  }
  return out;
}

double OrderReport::image_rate() const {
  return image_total == 0 ? 0.0 : static_cast<double>(image_errors) / static_cast<double>(image_total);
}

double OrderReport::reaction_rate() const {
  return reaction_total == 0 ? 0.0 : static_cast<double>(reaction_errors) / static_cast<double>(reaction_total);
}

void OrderReport::add(const OrderOutcome& o) {
  if (!o.perfect) {
    ++imperfect_samples;
    return;
  }
  reaction_total += o.reactions;
  reaction_errors += o.misplacements;
  if (o.reactions < 2) {
    ++excluded_single_reaction_images;
    return;
  }
  ++image_total;
  if (o.misplacements > 0) ++image_errors;
}

OrderReport& OrderReport::operator+=(const OrderReport& o) {
  image_total += o.image_total;
  image_errors += o.image_errors;
  reaction_total += o.reaction_total;
  reaction_errors += o.reaction_errors;
  excluded_single_reaction_images += o.excluded_single_reaction_images;
  imperfect_samples += o.imperfect_samples;
  return *this;
}

OrderReport corpus_rates(const std::vector<DiagramAnnotation>& gts, const std::vector<PredictionRecord>& preds,
                         const EvalOptions& options) {
  MatchConfig cfg{options.iou_threshold, options.ned_threshold, Criterion::hybrid};
  cfg.validate();
  std::unordered_map<std::string, std::size_t> gt_pos;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!gt_pos.emplace(gts[i].image_id, i).second) {
      throw CorpusError("duplicate image_id in ground truth: " + gts[i].image_id);
    }
  }
  std::vector<std::size_t> target(preds.size());
  std::vector<bool> seen(gts.size(), false);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    auto it = gt_pos.find(preds[k].image_id);
    if (it == gt_pos.end()) throw CorpusError("prediction for unknown image_id: " + preds[k].image_id);
    if (seen[it->second]) throw CorpusError("duplicate image_id in predictions: " + preds[k].image_id);
    if (!preds[k].format && !options.default_format) {
      throw CorpusError("prediction for " + preds[k].image_id + " has no format and no default is set");
    }
    seen[it->second] = true;
    target[k] = it->second;
  }

  std::vector<OrderOutcome> outcomes(preds.size());
  parallel_for(preds.size(), options.jobs, [&](std::size_t k) {
    const auto& p = preds[k];
    const auto& gt = gts[target[k]];
    const auto parsed = parse_prediction(p.raw, p.format ? *p.format : *options.default_format);
    const auto* pred = std::get_if<ParsedPrediction>(&parsed);
    if (pred == nullptr) return;
    IdentifierMap map = IdentifierMap::from_annotation(gt);
    if (options.maps != nullptr) {
      if (auto it = options.maps->find(gt.image_id); it != options.maps->end()) map = it->second.with_boxes_from(gt);
    }
    outcomes[k] = order_inconsistency(*pred, gt, map, cfg);
  });
  OrderReport report;
  for (const auto& o : outcomes) report.add(o);
  return report;
}

json to_json(const OrderReport& r) {
  return json{{"image_level", {{"total", r.image_total}, {"errors", r.image_errors}, {"rate", r.image_rate()}}},
              {"reaction_level",
               {{"total", r.reaction_total}, {"errors", r.reaction_errors}, {"rate", r.reaction_rate()}}},
              {"excluded_single_reaction_images", r.excluded_single_reaction_images},
              {"imperfect_samples", r.imperfect_samples}};
}

std::string format_order_report(const OrderReport& r) {
  char buf[160];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %9s\n", "level", "total", "errors", "rate");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s %10zu %10zu %8.2f%%\n", "image", r.image_total, r.image_errors,
                100.0 * r.image_rate());
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s %10zu %10zu %8.2f%%\n", "reaction", r.reaction_total, r.reaction_errors,
                100.0 * r.reaction_rate());
  out << buf;
  out << "single-reaction images excluded at image level: " << r.excluded_single_reaction_images << "\n";
  out << "imperfect samples skipped: " << r.imperfect_samples << "\n";
  return out.str();
}

}  // namespace rxnkit
