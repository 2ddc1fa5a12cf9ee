#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rxnkit/reaction_model.hpp"
#include "rxnkit/text_util.hpp"

namespace rxnkit {

enum class Criterion { soft, hybrid };
std::string_view to_string(Criterion c);

struct MatchConfig {
  double iou_threshold = 0.5;
  double ned_threshold = 0.2;
  Criterion criterion = Criterion::hybrid;

  /// Throws std::invalid_argument unless 0 < iou <= 1 and 0 <= ned < 1.
  void validate() const;
};

/// Intersection over union; 0 for disjoint interiors, 1 for equal boxes.
double iou(const Box& a, const Box& b);

/// Text is ignored, condition molecules are merged into reactants on both
/// sides, and each merged group (reactants+conditions, products) must pair
/// one-to-one with IoU above the threshold. Throws std::invalid_argument if
/// `pred` carries unresolved handles.
bool reaction_matches_soft(const BoxReaction& pred, const BoxReaction& gt,
                           const MatchConfig& cfg);

/// Roles are compared separately. For bivp/idtvp molecules pair by IoU and
/// texts pair by normalized edit distance; for bros only molecule boxes are
/// compared (role by role). Throws std::invalid_argument if `pred` carries
/// unresolved handles.
bool reaction_matches_hybrid(const BoxReaction& pred, const BoxReaction& gt,
                             OutputFormat format, const MatchConfig& cfg);

bool reaction_matches(const BoxReaction& pred, const BoxReaction& gt, OutputFormat format,
                      const MatchConfig& cfg);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt)
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gt;
};

/// Maximum one-to-one matching over the criterion's match relation.
/// Predictions with unresolved handles match nothing.
Assignment match_sets(const std::vector<BoxReaction>& preds, const std::vector<BoxReaction>& gts,
                      OutputFormat format, const MatchConfig& cfg);

struct PRF1 {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;

  PRF1& operator+=(const PRF1& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const PRF1&, const PRF1&) = default;
};

PRF1 score(const Assignment& a);

}  // namespace rxnkit
