#include <doctest.h>

#include <array>
#include <fstream>
#include <random>
#include <sstream>

#include "rxnkit/bipartite.hpp"
#include "rxnkit/corpus_eval.hpp"
#include "rxnkit/identifier_map.hpp"
#include "rxnkit/match_engine.hpp"
#include "support/generators.hpp"

using namespace rxnkit;

namespace {

BoxReaction make_reaction(std::vector<Box> reactants, std::vector<Box> conditions,
                          std::vector<Box> products, std::vector<std::string> condition_texts = {}) {
  BoxReaction r;
  r.reactants.molecules = std::move(reactants);
  r.conditions.molecules = std::move(conditions);
  r.products.molecules = std::move(products);
  r.conditions.texts = std::move(condition_texts);
  return r;
}

const Box kA{0, 0, 100, 100};
const Box kB{200, 0, 300, 100};
const Box kC{400, 0, 500, 100};

MatchConfig soft_cfg() { return MatchConfig{0.5, 0.2, Criterion::soft}; }
MatchConfig hybrid_cfg() { return MatchConfig{0.5, 0.2, Criterion::hybrid}; }

std::vector<BoxReaction> resolved(const ParsedPrediction& p, const DiagramAnnotation& a) {
  return resolve(p, IdentifierMap::from_annotation(a)).reactions;
}

void shuffle_roles(testing::Rng& rng, BoxReaction& r) {
  for (Role role : kAllRoles) {
    std::shuffle(r.role(role).molecules.begin(), r.role(role).molecules.end(), rng);
    std::shuffle(r.role(role).texts.begin(), r.role(role).texts.end(), rng);
  }
}

}  // namespace

TEST_CASE("iou examples") {
  CHECK(iou(Box{0, 0, 10, 10}, Box{0, 0, 10, 10}) == 1.0);
  CHECK(iou(Box{0, 0, 10, 10}, Box{20, 20, 30, 30}) == 0.0);
  CHECK(iou(Box{0, 0, 10, 10}, Box{10, 0, 20, 10}) == 0.0);  // touching edges

  const Box a{0, 0, 10, 10};
  const Box b{5, 0, 15, 10};
  const double oracle = testing::rasterized_iou(a, b, 30);
  CHECK(oracle == doctest::Approx(50.0 / 150.0));
  CHECK(iou(a, b) == oracle);
}

TEST_CASE("iou is symmetric and bounded") {
  testing::Rng rng(3);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 5000; ++i) {
    const double x = u(rng), y = u(rng), x2 = u(rng), y2 = u(rng);
    const Box a{x, y, x + 1 + u(rng), y + 1 + u(rng)};
    const Box b{x2, y2, x2 + 1 + u(rng), y2 + 1 + u(rng)};
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(iou(a, a) == 1.0);
  }
}

TEST_CASE("normalized edit distance examples") {
  CHECK(normalized_edit_distance("NaOH", "NaOH") == 0.0);
  CHECK(testing::textbook_levenshtein("kitten", "sitting") == 3);
  CHECK(normalized_edit_distance("kitten", "sitting") == 3.0 / 7.0);
  CHECK(normalized_edit_distance("", "x") == 1.0);
  CHECK(normalized_edit_distance("", "") == 0.0);
  CHECK(normalized_edit_distance("NaQH", "NaOH") == 0.25);
  // code points, not bytes: one substitution over four characters
  CHECK(normalized_edit_distance("0 °C", "0 °F") == 0.25);
  CHECK(normalized_edit_distance("  Pd/C,\tH2 ", "Pd/C, H2") == 0.0);
}

TEST_CASE("levenshtein agrees with the textbook recurrence") {
  testing::Rng rng(5);
  const std::string alpha = "abcd";
  for (int i = 0; i < 2000; ++i) {
    std::string a, b;
    for (std::size_t k = rng() % 9; k > 0; --k) a.push_back(alpha[rng() % alpha.size()]);
    for (std::size_t k = rng() % 9; k > 0; --k) b.push_back(alpha[rng() % alpha.size()]);
    const auto d = levenshtein(to_code_points(a), to_code_points(b));
    CHECK(d == testing::textbook_levenshtein(a, b));
    CHECK(normalized_edit_distance(a, b) == normalized_edit_distance(b, a));
    CHECK(normalized_edit_distance(a, a) == 0.0);
  }
}

TEST_CASE("soft match examples") {
  const auto gt = make_reaction({kA}, {kB}, {kC}, {"NaOH"});
  SUBCASE("text ignored") {
    CHECK(reaction_matches_soft(make_reaction({kA}, {kB}, {kC}, {"completely different"}), gt,
                                soft_cfg()));
  }
  SUBCASE("condition molecule listed as reactant") {
    CHECK(reaction_matches_soft(make_reaction({kA, kB}, {}, {kC}), gt, soft_cfg()));
  }
  SUBCASE("missing product") {
    const auto two_products = make_reaction({kA}, {}, {kB, kC});
    CHECK_FALSE(reaction_matches_soft(make_reaction({kA}, {}, {kB}), two_products, soft_cfg()));
  }
  SUBCASE("iou must exceed the threshold strictly") {
    const auto gt1 = make_reaction({Box{0, 0, 10, 10}}, {}, {kC});
    // iou exactly 0.5: intersection 50, union 100
    const auto half = make_reaction({Box{0, 0, 5, 10}}, {}, {kC});
    CHECK(iou(Box{0, 0, 5, 10}, Box{0, 0, 10, 10}) == 0.5);
    CHECK_FALSE(reaction_matches_soft(half, gt1, soft_cfg()));
  }
  SUBCASE("unresolved prediction is a precondition error") {
    auto bad = make_reaction({kA}, {}, {kC});
    bad.unresolved = {"9z"};
    CHECK_THROWS_AS(reaction_matches_soft(bad, gt, soft_cfg()), std::invalid_argument);
  }
}

TEST_CASE("hybrid match examples") {
  const auto gt = make_reaction({kA}, {}, {kC}, {"NaOH", "MeOH, reflux"});
  CHECK(normalized_edit_distance("NaOH.", "NaOH") == 0.2);  // boundary is inclusive
  CHECK(reaction_matches_hybrid(make_reaction({kA}, {}, {kC}, {"NaOH.", "MeOH,reflux"}), gt,
                                OutputFormat::idtvp, hybrid_cfg()));
  // "NaOH" vs "Na" is distance 0.5
  CHECK_FALSE(reaction_matches_hybrid(make_reaction({kA}, {}, {kC}, {"Na", "MeOH, reflux"}), gt,
                                      OutputFormat::idtvp, hybrid_cfg()));
  // missing text component
  CHECK_FALSE(reaction_matches_hybrid(make_reaction({kA}, {}, {kC}, {"NaOH"}), gt,
                                      OutputFormat::bivp, hybrid_cfg()));
  // bros compares boxes only
  CHECK(reaction_matches_hybrid(make_reaction({kA}, {}, {kC}, {"xyz"}), gt, OutputFormat::bros,
                                hybrid_cfg()));
  // gt product placed in conditions
  const auto gt2 = make_reaction({kA}, {}, {kB, kC});
  CHECK_FALSE(reaction_matches_hybrid(make_reaction({kA}, {kB}, {kC}), gt2, OutputFormat::idtvp,
                                      hybrid_cfg()));
  CHECK(reaction_matches_soft(make_reaction({kA}, {kB}, {kC}), gt2, soft_cfg()) == false);
}

TEST_CASE("role assignment oracle over three molecules") {
  // Every assignment of three well-separated molecules to roles, for both
  // prediction and ground truth. Hybrid matches iff roles agree exactly;
  // soft matches iff the merged (reactant or condition) vs product split agrees.
  const std::array<Box, 3> boxes{kA, kB, kC};
  const auto build = [&](const std::array<int, 3>& roles) {
    BoxReaction r;
    for (std::size_t m = 0; m < 3; ++m) {
      r.role(static_cast<Role>(roles[m])).molecules.push_back(boxes[m]);
    }
    return r;
  };
  const auto valid = [](const std::array<int, 3>& roles) {
    bool has_r = false, has_p = false;
    for (int r : roles) {
      has_r |= r == 0;
      has_p |= r == 2;
    }
    return has_r && has_p;
  };
  int cases = 0;
  for (int pc = 0; pc < 27; ++pc) {
    const std::array<int, 3> pr{pc % 3, pc / 3 % 3, pc / 9};
    if (!valid(pr)) continue;
    for (int gc = 0; gc < 27; ++gc) {
      const std::array<int, 3> gr{gc % 3, gc / 3 % 3, gc / 9};
      if (!valid(gr)) continue;
      const bool same = pr == gr;
      bool same_split = true;
      for (std::size_t m = 0; m < 3; ++m) same_split &= (pr[m] == 2) == (gr[m] == 2);
      CHECK(reaction_matches_hybrid(build(pr), build(gr), OutputFormat::idtvp, hybrid_cfg()) ==
            same);
      CHECK(reaction_matches_soft(build(pr), build(gr), soft_cfg()) == same_split);
      ++cases;
    }
  }
  CHECK(cases == 12 * 12);
}

TEST_CASE("maximum matching beats greedy first fit") {
  // greedy in index order: p0->g0, p1 blocked, p2->g1  => 2 pairs
  const std::vector<std::vector<int>> adj = {{0, 1}, {0}, {1, 2}};
  const auto rel = [&](std::size_t p, std::size_t g) {
    return std::find(adj[p].begin(), adj[p].end(), static_cast<int>(g)) != adj[p].end();
  };
  CHECK(testing::brute_force_max_matching(3, 3, rel) == 3);
  const auto m = maximum_bipartite_matching(3, adj);
  CHECK(std::count_if(m.begin(), m.end(), [](int r) { return r >= 0; }) == 3);
}

TEST_CASE("match_sets examples") {
  const auto g0 = make_reaction({kA}, {}, {Box{600, 0, 700, 100}});
  const auto g1 = make_reaction({kA}, {}, {Box{610, 0, 710, 100}});
  const auto p = make_reaction({kA}, {}, {Box{605, 0, 705, 100}});
  const auto a = match_sets({p, p}, {g0, g1}, OutputFormat::idtvp, hybrid_cfg());
  CHECK(a.pairs.size() == 2);
  CHECK(a.unmatched_gt.empty());

  // duplicates of one correct reaction: one TP, one FP
  const auto dup = match_sets({g0, g0}, {g0}, OutputFormat::idtvp, hybrid_cfg());
  CHECK(score(dup) == PRF1{1, 1, 0});

  // unresolved predictions match nothing
  auto unresolved = g0;
  unresolved.unresolved = {"9z"};
  CHECK(score(match_sets({unresolved}, {g0}, OutputFormat::idtvp, hybrid_cfg())) == PRF1{0, 1, 1});
}

TEST_CASE("match_sets equals brute force and is permutation invariant") {
  testing::Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto gt = testing::random_diagram(rng, 6, 1 + static_cast<int>(rng() % 4));
    const auto format = static_cast<OutputFormat>(rng() % 3);
    const auto pred = testing::perturbed_prediction(rng, gt, format);
    auto preds = resolved(pred, gt);
    auto gts = box_reactions(gt);
    if (preds.size() > 4) preds.resize(4);
    for (const MatchConfig& cfg : {soft_cfg(), hybrid_cfg()}) {
      const auto rel = [&](std::size_t p, std::size_t g) {
        return preds[p].resolved() && reaction_matches(preds[p], gts[g], format, cfg);
      };
      const std::size_t expected = testing::brute_force_max_matching(preds.size(), gts.size(), rel);
      const auto assignment = match_sets(preds, gts, format, cfg);
      CHECK(assignment.pairs.size() == expected);
      for (const auto& [p, g] : assignment.pairs) CHECK(rel(p, g));
      CHECK(assignment.pairs.size() + assignment.unmatched_pred.size() == preds.size());
      CHECK(assignment.pairs.size() + assignment.unmatched_gt.size() == gts.size());

      auto sp = preds;
      auto sg = gts;
      std::shuffle(sp.begin(), sp.end(), rng);
      std::shuffle(sg.begin(), sg.end(), rng);
      for (auto& r : sp) shuffle_roles(rng, r);
      for (auto& r : sg) shuffle_roles(rng, r);
      CHECK(match_sets(sp, sg, format, cfg).pairs.size() == expected);
    }
  }
}

TEST_CASE("hybrid match implies soft match") {
  testing::Rng rng(123);
  std::size_t hybrid_hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto gt = testing::random_diagram(rng, 5, 3);
    const auto format = static_cast<OutputFormat>(rng() % 3);
    const auto preds = resolved(testing::perturbed_prediction(rng, gt, format), gt);
    const auto gts = box_reactions(gt);
    for (const auto& p : preds) {
      if (!p.resolved()) continue;
      for (const auto& g : gts) {
        if (reaction_matches_hybrid(p, g, format, hybrid_cfg())) {
          ++hybrid_hits;
          CHECK(reaction_matches_soft(p, g, soft_cfg()));
        }
      }
    }
  }
  CHECK(hybrid_hits > 100);
}

TEST_CASE("PRF1 conventions and monotonicity") {
  CHECK(PRF1{}.precision() == 0.0);
  CHECK(PRF1{}.recall() == 0.0);
  CHECK(PRF1{}.f1() == 0.0);
  CHECK(PRF1{3, 2, 2}.f1() == 0.6);
  for (std::size_t tp = 0; tp < 12; ++tp) {
    for (std::size_t fp = 0; fp < 12; ++fp) {
      for (std::size_t fn = 0; fn < 12; ++fn) {
        const PRF1 base{tp, fp, fn};
        CHECK(PRF1{tp + 1, fp, fn}.f1() >= base.f1());
        if (fp > 0 && fn > 0) CHECK(PRF1{tp + 1, fp - 1, fn - 1}.f1() >= base.f1());
      }
    }
  }
}

TEST_CASE("MatchConfig bounds") {
  CHECK_NOTHROW(MatchConfig{1.0, 0.0}.validate());
  CHECK_THROWS(MatchConfig{0.0, 0.2}.validate());
  CHECK_THROWS(MatchConfig{1.1, 0.2}.validate());
  CHECK_THROWS(MatchConfig{0.5, 1.0}.validate());
}

TEST_CASE("evaluate_corpus micro aggregation fixture") {
  std::ifstream gts_in(RXNKIT_FIXTURES "/metrics/gt.lines");
  std::ifstream preds_in(RXNKIT_FIXTURES "/metrics/pred.lines");
  REQUIRE(gts_in);
  REQUIRE(preds_in);
  const auto gts = read_ground_truth_lines(gts_in);
  const auto preds = read_prediction_lines(preds_in);
  const MatchReport report = evaluate_corpus(gts, preds, EvalOptions{});

  // Per-image counts re-derived with the brute-force matcher.
  const std::vector<PRF1> expected = {{1, 0, 1}, {2, 1, 0}, {0, 1, 1}};
  REQUIRE(report.per_image.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.per_image[i].hybrid == expected[i]);
    const auto parsed = std::get<ParsedPrediction>(parse_prediction(preds[i].raw, *preds[i].format));
    const auto pr = resolved(parsed, gts[i]);
    const auto gr = box_reactions(gts[i]);
    const std::size_t tp = testing::brute_force_max_matching(pr.size(), gr.size(), [&](auto p, auto g) {
      return reaction_matches_hybrid(pr[p], gr[g], OutputFormat::idtvp, hybrid_cfg());
    });
    CHECK(tp == expected[i].tp);
  }
  CHECK(report.hybrid.overall == PRF1{3, 2, 2});
  CHECK(report.hybrid.overall.precision() == 0.6);
  CHECK(report.hybrid.overall.recall() == 0.6);
  CHECK(report.hybrid.overall.f1() == 0.6);
  CHECK(report.hybrid.by_type.at(DiagramType::single) == PRF1{1, 0, 1});
}

TEST_CASE("evaluate_corpus edge cases") {
  testing::Rng rng(8);
  std::vector<DiagramAnnotation> gts;
  std::vector<PredictionRecord> perfect;
  for (int i = 0; i < 5; ++i) {
    auto a = testing::random_diagram(rng, 6, 2);
    a.image_id = "img" + std::to_string(i);
    perfect.push_back({a.image_id, OutputFormat::idtvp,
                       serialize_prediction(to_prediction(a, OutputFormat::idtvp)), ""});
    gts.push_back(std::move(a));
  }
  const auto full = evaluate_corpus(gts, perfect, EvalOptions{});
  CHECK(full.hybrid.overall.f1() == 1.0);
  CHECK(full.soft.overall.precision() == 1.0);

  const auto empty = evaluate_corpus(gts, {}, EvalOptions{});
  CHECK(empty.hybrid.overall.precision() == 0.0);
  CHECK(empty.hybrid.overall.recall() == 0.0);
  CHECK(empty.hybrid.overall.fn == 10);

  auto broken = perfect;
  broken[0].raw = "not json";
  const auto with_failure = evaluate_corpus(gts, broken, EvalOptions{});
  CHECK(with_failure.parse_failures == 1);
  CHECK(with_failure.hybrid.overall == PRF1{8, 0, 2});

  auto dup = perfect;
  dup.push_back(perfect[0]);
  CHECK_THROWS_AS(evaluate_corpus(gts, dup, EvalOptions{}), CorpusError);
  auto unknown = perfect;
  unknown[0].image_id = "nope";
  CHECK_THROWS_AS(evaluate_corpus(gts, unknown, EvalOptions{}), CorpusError);

  EvalOptions parallel;
  parallel.jobs = 4;
  CHECK(evaluate_corpus(gts, broken, parallel).hybrid.overall == PRF1{8, 0, 2});
}
