#include <doctest.h>

#include <cmath>

#include "rxnkit/serialization_analyzer.hpp"
#include "support/order_harness.hpp"

using namespace rxnkit;

namespace {

OrderOutcome analyze(const ParsedPrediction& p, const DiagramAnnotation& gt) {
  return order_inconsistency(p, gt, IdentifierMap::from_annotation(gt));
}

}  // namespace

TEST_CASE("identical prediction is perfect with no misplacements") {
  testing::Rng rng(1);
  const auto gt = testing::chain_diagram("a", 4, rng);
  for (auto f : {OutputFormat::bros, OutputFormat::bivp, OutputFormat::idtvp}) {
    const auto o = analyze(to_prediction(gt, f), gt);
    CHECK(o.perfect);
    CHECK(o.reactions == 4);
    CHECK(o.misplacements == 0);
  }
}

TEST_CASE("swapping two reactions misplaces both") {
  testing::Rng rng(2);
  const auto gt = testing::chain_diagram("a", 4, rng);
  auto p = to_prediction(gt, OutputFormat::idtvp);
  std::swap(p.reactions[1], p.reactions[3]);
  const auto o = analyze(p, gt);
  CHECK(o.perfect);
  CHECK(o.misplacements == 2);
}

TEST_CASE("a wrong box excludes the pair") {
  testing::Rng rng(3);
  const auto gt = testing::chain_diagram("a", 3, rng);
  auto p = to_prediction(gt, OutputFormat::bros);
  p.reactions[0].products[0] = Component::molecule(Box{1200, 1200, 1300, 1300});
  CHECK_FALSE(analyze(p, gt).perfect);
  auto extra = to_prediction(gt, OutputFormat::bivp);
  extra.reactions.push_back(extra.reactions[0]);
  CHECK_FALSE(analyze(extra, gt).perfect);
}

TEST_CASE("duplicated reactions are not counted as misplaced") {
  testing::Rng rng(4);
  auto gt = testing::chain_diagram("a", 2, rng);
  gt.reactions.push_back(gt.reactions[0]);
  auto p = to_prediction(gt, OutputFormat::bivp);
  // GT order r0 r1 r0; prediction r0 r0 r1 moves exactly one copy of r0 and r1.
  p.reactions = {p.reactions[0], p.reactions[2], p.reactions[1]};
  const auto o = analyze(p, gt);
  CHECK(o.perfect);
  CHECK(o.misplacements == 2);
}

TEST_CASE("canonical order predictions yield no errors") {
  testing::Rng rng(5);
  for (int n = 1; n <= 6; ++n) {
    const auto gt = testing::chain_diagram("a", n, rng);
    const auto canonical = canonical_serialize(to_prediction(gt, OutputFormat::bivp));
    const auto parsed = parse_prediction(canonical, OutputFormat::bivp);
    REQUIRE(std::holds_alternative<ParsedPrediction>(parsed));
    const auto o = analyze(std::get<ParsedPrediction>(parsed), gt);
    CHECK(o.perfect);
    CHECK(o.misplacements == 0);
  }
}

TEST_CASE("four injected images out of ten give a forty percent image rate") {
  testing::Rng rng(6);
  std::vector<DiagramAnnotation> gts;
  std::vector<PredictionRecord> preds;
  std::size_t moved = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    auto gt = testing::chain_diagram("img" + std::to_string(i), 2 + i % 4, rng);
    auto p = to_prediction(gt, OutputFormat::idtvp);
    if (i % 3 == 0) {
      std::rotate(p.reactions.begin(), p.reactions.begin() + 1, p.reactions.end());
      moved += p.reactions.size();
    }
    total += p.reactions.size();
    preds.push_back({gt.image_id, OutputFormat::idtvp, serialize_prediction(p), ""});
    gts.push_back(std::move(gt));
  }
  const auto r = corpus_rates(gts, preds, {});
  CHECK(r.image_total == 10);
  CHECK(r.image_errors == 4);
  CHECK(r.image_rate() == doctest::Approx(0.4));
  CHECK(r.reaction_total == total);
  CHECK(r.reaction_errors == moved);
}

TEST_CASE("injected rates are recovered exactly") {
  for (auto f : {OutputFormat::bros, OutputFormat::bivp, OutputFormat::idtvp}) {
    for (double rate : {0.0, 0.2, 0.4}) {
      testing::Rng rng(std::uint64_t(100 + rate * 10));
      const auto c = testing::injected_corpus(rng, 60, rate, 5, f);
      EvalOptions opts;
      opts.jobs = 3;
      const auto r = corpus_rates(c.gts, c.preds, opts);
      CHECK(r == c.expected);
      CHECK(c.expected.image_errors ==
            std::size_t(std::llround(rate * double(c.expected.image_total))));
    }
  }
}

TEST_CASE("single-reaction images never count at image level") {
  testing::Rng rng(7);
  const auto gt = testing::chain_diagram("solo", 1, rng);
  OrderReport r;
  r.add(analyze(to_prediction(gt, OutputFormat::idtvp), gt));
  CHECK(r.image_total == 0);
  CHECK(r.excluded_single_reaction_images == 1);
  CHECK(r.reaction_total == 1);
  CHECK(r.image_rate() == 0.0);
}

TEST_CASE("rates and table layout") {
  OrderReport bivp{3882, 500, 0, 0, 0, 0};
  CHECK(std::round(bivp.image_rate() * 10000) / 100 == doctest::Approx(12.88));
  OrderReport idtvp{0, 0, 31300, 2538, 0, 0};
  CHECK(std::round(idtvp.reaction_rate() * 10000) / 100 == doctest::Approx(8.11));
  const OrderReport rows[] = {{3882, 500, 20992, 3131, 0, 0}, {5833, 272, 31300, 2538, 0, 0}};
  CHECK(std::round(rows[0].reaction_rate() * 10000) / 100 == doctest::Approx(14.92));
  CHECK(std::round(rows[1].image_rate() * 10000) / 100 == doctest::Approx(4.66));
  const auto text = format_order_report(OrderReport{3882, 500, 31300, 2538, 7, 2});
  CHECK(text.find("12.88%") != std::string::npos);
  CHECK(text.find("8.11%") != std::string::npos);
  const auto j = to_json(OrderReport{3882, 500, 31300, 2538, 7, 2});
  CHECK(j["image_level"]["errors"] == 500);
  CHECK(j["reaction_level"]["total"] == 31300);
}

TEST_CASE("parse failures and corpus errors") {
  testing::Rng rng(8);
  const auto gt = testing::chain_diagram("a", 2, rng);
  const auto r = corpus_rates({gt}, {{"a", OutputFormat::idtvp, "not json", ""}}, {});
  CHECK(r.imperfect_samples == 1);
  CHECK_THROWS_AS(corpus_rates({gt}, {{"zz", OutputFormat::idtvp, "[]", ""}}, {}), CorpusError);
  CHECK_THROWS_AS(corpus_rates({gt, gt}, {}, {}), CorpusError);
  CHECK_THROWS_AS(corpus_rates({gt}, {{"a", std::nullopt, "[]", ""}}, {}), CorpusError);
}
