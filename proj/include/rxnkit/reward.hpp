#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxnkit/identifier_map.hpp"
#include "rxnkit/match_engine.hpp"
#include "rxnkit/reaction_model.hpp"

namespace rxnkit {

/// Soft:Hybrid weighting of the verifiable reward plus the thresholds each
/// criterion is evaluated with. Weights are non-negative and sum to 1.
struct RewardSpec {
  double soft_weight = 0.5;
  double hybrid_weight = 0.5;
  MatchConfig soft{0.5, 0.2, Criterion::soft};
  MatchConfig hybrid{0.5, 0.2, Criterion::hybrid};

  /// Normalizes a soft:hybrid ratio (e.g. 1:1, 1:0, 0:1) to weights.
  static RewardSpec from_ratio(double soft, double hybrid, double iou_threshold = 0.5,
                               double ned_threshold = 0.2);

  /// Throws std::invalid_argument when weights or thresholds are out of range.
  void validate() const;

  json to_json() const;
};

/// Parses "<soft>:<hybrid>" into its two non-negative parts.
/// Throws std::invalid_argument on malformed input or a 0:0 ratio.
std::pair<double, double> parse_ratio(std::string_view text);

/// Per-sample F1 used as reward component. Equal to PRF1::f1() except that
/// an empty prediction against an empty ground truth scores 1.
double sample_f1(const PRF1& counts);

struct SampleScore {
  PRF1 soft;
  PRF1 hybrid;
  Assignment soft_assignment;
  Assignment hybrid_assignment;
  std::vector<std::string> unresolved;
};

/// Matches a parsed prediction against ground truth under both criteria.
SampleScore score_prediction(const ParsedPrediction& pred, const DiagramAnnotation& gt,
                             const IdentifierMap& map, const RewardSpec& spec);

struct RewardResult {
  double reward = 0.0;
  double soft_component = 0.0;
  double hybrid_component = 0.0;
  bool parse_ok = false;
  std::optional<ParseFailure> failure;
  PRF1 soft;
  PRF1 hybrid;
  std::vector<std::string> unresolved;
};

/// reward = soft_weight * F1_soft + hybrid_weight * F1_hybrid, or exactly 0
/// when the output does not parse. Never throws.
RewardResult sample_reward(std::string_view raw, const DiagramAnnotation& gt,
                           const IdentifierMap& map, OutputFormat format,
                           const RewardSpec& spec) noexcept;

json to_json(const RewardResult& r);

}  // namespace rxnkit
