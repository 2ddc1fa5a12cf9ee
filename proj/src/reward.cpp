#include "rxnkit/reward.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "rxnkit/text_util.hpp"

namespace rxnkit {

RewardSpec RewardSpec::from_ratio(double soft, double hybrid, double iou_threshold,
                                  double ned_threshold) {
  if (!(soft >= 0.0) || !(hybrid >= 0.0) || !std::isfinite(soft) || !std::isfinite(hybrid) ||
      soft + hybrid <= 0.0) {
    throw std::invalid_argument("reward ratio parts must be non-negative and not both zero");
  }
  RewardSpec spec;
  spec.soft_weight = soft / (soft + hybrid);
  spec.hybrid_weight = hybrid / (soft + hybrid);
  spec.soft = MatchConfig{iou_threshold, ned_threshold, Criterion::soft};
  spec.hybrid = MatchConfig{iou_threshold, ned_threshold, Criterion::hybrid};
  spec.validate();
  return spec;
}

void RewardSpec::validate() const {
  if (!(soft_weight >= 0.0) || !(hybrid_weight >= 0.0) ||
      std::fabs(soft_weight + hybrid_weight - 1.0) > 1e-12) {
    throw std::invalid_argument("reward weights must be non-negative and sum to 1");
  }
  if (soft.criterion != Criterion::soft || hybrid.criterion != Criterion::hybrid) {
    throw std::invalid_argument("reward spec criteria are swapped");
  }
  soft.validate();
  hybrid.validate();
}

json RewardSpec::to_json() const {
  return json{{"soft_weight", soft_weight},
              {"hybrid_weight", hybrid_weight},
              {"iou_threshold", hybrid.iou_threshold},
              {"ned_threshold", hybrid.ned_threshold}};
}

std::pair<double, double> parse_ratio(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("ratio must look like <soft>:<hybrid>, got \"" +
                                std::string(text) + "\"");
  }
  const auto parse_part = [&](std::string_view part) {
    const std::string s = trim(part);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !(v >= 0.0) ||
        !std::isfinite(v)) {
      throw std::invalid_argument("invalid ratio part \"" + s + "\"");
    }
    return v;
  };
  const double soft = parse_part(text.substr(0, colon));
  const double hybrid = parse_part(text.substr(colon + 1));
  if (soft + hybrid <= 0.0) throw std::invalid_argument("ratio 0:0 has no weight");
  return {soft, hybrid};
}

double sample_f1(const PRF1& counts) {
  if (counts.tp == 0 && counts.fp == 0 && counts.fn == 0) return 1.0;
  return counts.f1();
}

SampleScore score_prediction(const ParsedPrediction& pred, const DiagramAnnotation& gt,
                             const IdentifierMap& map, const RewardSpec& spec) {
  const Resolution resolved = resolve(pred, map);
  const std::vector<BoxReaction> gts = box_reactions(gt);

  SampleScore out;
  out.soft_assignment = match_sets(resolved.reactions, gts, pred.format, spec.soft);
  out.hybrid_assignment = match_sets(resolved.reactions, gts, pred.format, spec.hybrid);
  out.soft = score(out.soft_assignment);
  out.hybrid = score(out.hybrid_assignment);
  for (const auto& handles : resolved.unresolved) {
    out.unresolved.insert(out.unresolved.end(), handles.begin(), handles.end());
  }
  return out;
}

RewardResult sample_reward(std::string_view raw, const DiagramAnnotation& gt,
                           const IdentifierMap& map, OutputFormat format,
                           const RewardSpec& spec) noexcept {
  RewardResult out;
  try {
    PredictionParse parsed = parse_prediction(raw, format);
    if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
      out.failure = std::move(*failure);
      out.hybrid.fn = out.soft.fn = gt.reactions.size();
      return out;
    }
    const auto& pred = std::get<ParsedPrediction>(parsed);
    SampleScore s = score_prediction(pred, gt, map, spec);
    out.parse_ok = true;
    out.soft = s.soft;
    out.hybrid = s.hybrid;
    out.unresolved = std::move(s.unresolved);
    out.soft_component = sample_f1(s.soft);
    out.hybrid_component = sample_f1(s.hybrid);
    out.reward = std::clamp(
        spec.soft_weight * out.soft_component + spec.hybrid_weight * out.hybrid_component, 0.0,
        1.0);
  } catch (const std::exception& e) {
    out = RewardResult{};
    out.failure = ParseFailure{FailureClass::schema, e.what()};
  } catch (...) {
    out = RewardResult{};
    out.failure = ParseFailure{FailureClass::schema, "unknown error"};
  }
  return out;
}

json to_json(const RewardResult& r) {
  const auto counts = [](const PRF1& c) { return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}}; };
  json out{{"reward", r.reward},
           {"soft", r.soft_component},
           {"hybrid", r.hybrid_component},
           {"parse_ok", r.parse_ok},
           {"soft_counts", counts(r.soft)},
           {"hybrid_counts", counts(r.hybrid)}};
  if (r.failure) {
    out["failure"] = std::string(to_string(r.failure->failure));
    out["failure_message"] = r.failure->message;
  }
  if (!r.unresolved.empty()) out["unresolved"] = r.unresolved;
  return out;
}

}  // namespace rxnkit
