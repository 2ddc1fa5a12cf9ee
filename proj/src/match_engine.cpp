#include "rxnkit/match_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "rxnkit/bipartite.hpp"

namespace rxnkit {

namespace {

bool boxes_pair(const std::vector<Box>& pred, const std::vector<Box>& gt, double threshold) {
  return has_perfect_matching(pred.size(), gt.size(), [&](std::size_t p, std::size_t g) {
    return iou(pred[p], gt[g]) > threshold;
  });
}

bool texts_pair(const std::vector<std::string>& pred, const std::vector<std::string>& gt,
                double threshold) {
  return has_perfect_matching(pred.size(), gt.size(), [&](std::size_t p, std::size_t g) {
    return normalized_edit_distance(pred[p], gt[g]) <= threshold;
  });
}

std::vector<Box> merged_reactant_boxes(const BoxReaction& r) {
  std::vector<Box> out = r.reactants.molecules;
  out.insert(out.end(), r.conditions.molecules.begin(), r.conditions.molecules.end());
  return out;
}

void require_resolved(const BoxReaction& pred) {
  if (!pred.resolved()) {
    throw std::invalid_argument("unresolved molecule reference: " + pred.unresolved.front());
  }
}

}  // namespace

std::string_view to_string(Criterion c) { return c == Criterion::soft ? "soft" : "hybrid"; }

void MatchConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou threshold must lie in (0, 1]");
  }
  if (!(ned_threshold >= 0.0 && ned_threshold < 1.0)) {
    throw std::invalid_argument("edit-distance threshold must lie in [0, 1)");
  }
}

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool reaction_matches_soft(const BoxReaction& pred, const BoxReaction& gt,
                           const MatchConfig& cfg) {
  require_resolved(pred);
  if (!gt.resolved()) return false;
  return boxes_pair(merged_reactant_boxes(pred), merged_reactant_boxes(gt),
                    cfg.iou_threshold) &&
         boxes_pair(pred.products.molecules, gt.products.molecules, cfg.iou_threshold);
}

bool reaction_matches_hybrid(const BoxReaction& pred, const BoxReaction& gt,
                             OutputFormat format, const MatchConfig& cfg) {
  require_resolved(pred);
  if (!gt.resolved()) return false;
  for (Role role : kAllRoles) {
    const RoleContents& p = pred.role(role);
    const RoleContents& g = gt.role(role);
    if (!boxes_pair(p.molecules, g.molecules, cfg.iou_threshold)) return false;
    if (format != OutputFormat::bros && !texts_pair(p.texts, g.texts, cfg.ned_threshold)) {
      return false;
    }
  }
  return true;
}

bool reaction_matches(const BoxReaction& pred, const BoxReaction& gt, OutputFormat format,
                      const MatchConfig& cfg) {
  return cfg.criterion == Criterion::soft ? reaction_matches_soft(pred, gt, cfg)
                                          : reaction_matches_hybrid(pred, gt, format, cfg);
}

Assignment match_sets(const std::vector<BoxReaction>& preds, const std::vector<BoxReaction>& gts,
                      OutputFormat format, const MatchConfig& cfg) {
  std::vector<std::vector<int>> adj(preds.size());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!preds[p].resolved()) continue;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (reaction_matches(preds[p], gts[g], format, cfg)) adj[p].push_back(static_cast<int>(g));
    }
  }
  const auto partner = maximum_bipartite_matching(gts.size(), adj);

  Assignment out;
  std::vector<bool> gt_used(gts.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (partner[p] < 0) {
      out.unmatched_pred.push_back(p);
    } else {
      const auto g = static_cast<std::size_t>(partner[p]);
      out.pairs.emplace_back(p, g);
      gt_used[g] = true;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) out.unmatched_gt.push_back(g);
  }
  return out;
}

double PRF1::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double PRF1::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

// Harmonic mean of precision and recall, written in counts so that it is a
// single correctly rounded division.
double PRF1::f1() const {
  if (tp == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

PRF1 score(const Assignment& a) {
  return PRF1{a.pairs.size(), a.unmatched_pred.size(), a.unmatched_gt.size()};
}

}  // namespace rxnkit
