#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxnkit/corpus_eval.hpp"
#include "rxnkit/identifier_map.hpp"
#include "rxnkit/match_engine.hpp"
#include "rxnkit/reaction_model.hpp"

namespace rxnkit {

struct OrderOutcome {
  /// Hybrid matching pairs every prediction with a ground-truth reaction.
  bool perfect = false;
  std::size_t reactions = 0;
  /// Matched predictions at a different list position than their partner.
  std::size_t misplacements = 0;
};

/// Among all perfect matchings the one with the fewest misplacements is
/// used, so duplicated reactions never count as misplaced.
OrderOutcome order_inconsistency(const ParsedPrediction& pred, const DiagramAnnotation& gt, const IdentifierMap& map,
                                 const MatchConfig& cfg = {});

struct OrderReport {
  std::size_t image_total = 0;
  std::size_t image_errors = 0;
  std::size_t reaction_total = 0;
  std::size_t reaction_errors = 0;
  std::size_t excluded_single_reaction_images = 0;
  /// Pairs left out because the prediction was not a perfect match.
  std::size_t imperfect_samples = 0;

  double image_rate() const;
  double reaction_rate() const;

  void add(const OrderOutcome& o);
  OrderReport& operator+=(const OrderReport& o);
  friend bool operator==(const OrderReport&, const OrderReport&) = default;
};

/// Pairs every prediction with its ground truth and aggregates the perfect
/// ones. Predictions that fail to parse are imperfect. Throws CorpusError on
/// unknown or duplicate image ids.
OrderReport corpus_rates(const std::vector<DiagramAnnotation>& gts, const std::vector<PredictionRecord>& preds,
                         const EvalOptions& options);

json to_json(const OrderReport& r);
/// Total / Errors / Rate table at image and reaction level.
std::string format_order_report(const OrderReport& r);

}  // namespace rxnkit
