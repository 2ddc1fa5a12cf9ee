#pragma once

#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rxnkit/identifier_map.hpp"
#include "rxnkit/match_engine.hpp"
#include "rxnkit/reaction_model.hpp"
#include "rxnkit/reward.hpp"

namespace rxnkit {

/// Corpus-level data problem (duplicate image_id, unknown image, ...).
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One line of a prediction file: {image_id, format, raw[, sample_id]}.
struct PredictionRecord {
  std::string image_id;
  std::optional<OutputFormat> format;
  std::string raw;
  std::string sample_id;
};

/// Reads annotation lines; errors carry "line N" in their path.
std::vector<DiagramAnnotation> read_ground_truth_lines(std::istream& in);
std::vector<PredictionRecord> read_prediction_lines(std::istream& in);

struct CriterionReport {
  PRF1 overall;
  std::map<DiagramType, PRF1> by_type;
};

struct ImageOutcome {
  std::string image_id;
  DiagramType diagram_type = DiagramType::unknown;
  bool predicted = false;
  bool parse_ok = false;
  PRF1 soft;
  PRF1 hybrid;
};

struct MatchReport {
  std::size_t images = 0;
  std::size_t predictions = 0;
  std::size_t parse_failures = 0;
  CriterionReport soft;
  CriterionReport hybrid;
  std::vector<ImageOutcome> per_image;
};

struct EvalOptions {
  double iou_threshold = 0.5;
  double ned_threshold = 0.2;
  /// Used when a prediction record does not name its format.
  std::optional<OutputFormat> default_format;
  /// Detector-side identifier maps by image_id; images without one use a
  /// map derived from their ground-truth molecules.
  const std::map<std::string, IdentifierMap>* maps = nullptr;
  unsigned jobs = 1;
};

/// Micro-averaged P/R/F1 over reactions under both criteria, with a
/// per-diagram-type breakdown. Images whose prediction fails to parse, or
/// which have no prediction, count every ground-truth reaction as a miss.
/// Throws CorpusError on duplicate or unknown image ids.
MatchReport evaluate_corpus(const std::vector<DiagramAnnotation>& gts,
                            const std::vector<PredictionRecord>& preds,
                            const EvalOptions& options);

json to_json(const PRF1& c);
json to_json(const MatchReport& r, bool include_images = false);
std::string format_report(const MatchReport& r);

}  // namespace rxnkit
