#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rxnkit/cli.hpp"
#include "rxnkit/corpus_eval.hpp"
#include "rxnkit/raster.hpp"
#include "support/generators.hpp"
#include "support/order_harness.hpp"

using namespace rxnkit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / ("rxnkit_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(dir / name, std::ios::binary) << content;
    return (dir / name).string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Three images, predictions with perturbations, as line files.
std::pair<std::string, std::string> corpus_files(const Workspace& w) {
  testing::Rng rng(21);
  std::string gt, pred;
  for (int i = 0; i < 3; ++i) {
    auto a = testing::random_diagram(rng, 8, 3);
    a.image_id = "img" + std::to_string(i);
    gt += to_json(a).dump() + "\n";
    const auto p = testing::perturbed_prediction(rng, a, OutputFormat::idtvp);
    pred += json{{"image_id", a.image_id}, {"format", "idtvp"}, {"raw", serialize_prediction(p)},
                 {"sample_id", "s" + std::to_string(i)}}
                .dump() +
            "\n";
  }
  return {w.write("gt.lines", gt), w.write("pred.lines", pred)};
}

}  // namespace

TEST_CASE("usage errors exit 2 and name the flag") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  const auto r = cli({"evaluate", "--pred", "p.lines"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--gt") != std::string::npos);
  CHECK(cli({"evaluate", "--gt", "g", "--pred", "p", "--iou", "0"}).code == kExitUsage);
  CHECK(cli({"reward", "--gt", "g", "--pred", "p", "--ratio", "banana"}).code == kExitUsage);
  CHECK(cli({"validate"}).code == kExitUsage);
  CHECK(cli({"evaluate", "--help"}).code == kExitOk);
}

TEST_CASE("missing files are data errors") {
  const auto r = cli({"evaluate", "--gt", "/nonexistent/g.lines", "--pred", "/nonexistent/p.lines"});
  CHECK(r.code == kExitDataError);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("evaluate matches the library report") {
  Workspace w;
  const auto [gt, pred] = corpus_files(w);
  const auto text = cli({"evaluate", "--gt", gt, "--pred", pred, "--format", "idtvp"});
  CHECK(text.code == kExitOk);
  CHECK(text.out.find("hybrid") != std::string::npos);

  const auto js = cli({"evaluate", "--gt", gt, "--pred", pred, "--json", "--jobs", "2"});
  REQUIRE(js.code == kExitOk);
  std::ifstream g(gt), p(pred);
  const auto direct = evaluate_corpus(read_ground_truth_lines(g), read_prediction_lines(p), {});
  CHECK(json::parse(js.out) == to_json(direct));
}

TEST_CASE("reward prints per-sample values and their mean") {
  Workspace w;
  const auto [gt, pred] = corpus_files(w);
  const auto r = cli({"reward", "--ratio", "1:1", "--gt", gt, "--pred", pred, "--json"});
  REQUIRE(r.code == kExitOk);
  const auto j = json::parse(r.out);
  REQUIRE(j["samples"].size() == 3);
  std::ifstream g(gt), p(pred);
  const auto gts = read_ground_truth_lines(g);
  const auto preds = read_prediction_lines(p);
  double sum = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto direct = sample_reward(preds[i].raw, gts[i], IdentifierMap::from_annotation(gts[i]),
                                      OutputFormat::idtvp, RewardSpec{});
    CHECK(j["samples"][i]["reward"].get<double>() == doctest::Approx(direct.reward));
    CHECK(j["samples"][i]["sample_id"] == preds[i].sample_id);
    sum += direct.reward;
  }
  CHECK(j["mean_reward"].get<double>() == doctest::Approx(sum / 3));
  const auto text = cli({"reward", "--gt", gt, "--pred", pred});
  CHECK(text.out.find("mean reward over 3 samples") != std::string::npos);

  const auto bad = w.write("bad.lines", R"({"image_id":"nope","format":"idtvp","raw":"[]"})" "\n");
  CHECK(cli({"reward", "--gt", gt, "--pred", bad}).code == kExitDataError);
}

TEST_CASE("validate reports bad records") {
  Workspace w;
  const auto [gt, pred] = corpus_files(w);
  CHECK(cli({"validate", "--gt", gt, "--pred", pred}).code == kExitOk);
  const auto broken = w.write("broken.lines", slurp(gt) + "{\"image_id\": 5}\n");
  const auto r = cli({"validate", "--gt", broken, "--json"});
  CHECK(r.code == kExitDataError);
  CHECK(json::parse(r.out)["gt"]["invalid"] == 1);
  const auto bad_pred = w.write("bp.lines", R"({"image_id":"img0","format":"idtvp","raw":"oops"})" "\n");
  const auto rp = cli({"validate", "--pred", bad_pred, "--json"});
  CHECK(rp.code == kExitDataError);
  CHECK(json::parse(rp.out)["pred"]["failures"]["syntax"] == 1);
}

TEST_CASE("analyze-order writes a report") {
  Workspace w;
  testing::Rng rng(3);
  const auto c = testing::injected_corpus(rng, 20, 0.4, 2, OutputFormat::idtvp);
  std::string gt, pred;
  for (const auto& a : c.gts) gt += to_json(a).dump() + "\n";
  for (const auto& p : c.preds) pred += json{{"image_id", p.image_id}, {"format", "idtvp"}, {"raw", p.raw}}.dump() + "\n";
  const auto report = w.path("order.json");
  const auto r = cli({"analyze-order", "--gt", w.write("g", gt), "--pred", w.write("p", pred), "--report", report,
                      "--json"});
  REQUIRE(r.code == kExitOk);
  const auto j = json::parse(slurp(report));
  CHECK(j == to_json(c.expected));
}

TEST_CASE("refine writes the golden outputs") {
  Workspace w;
  const std::string fixtures = RXNKIT_FIXTURES "/refine/";
  const auto r = cli({"refine", "--in", fixtures + "input.jsonl", "--out", w.path("std"), "--drops", w.path("drops"),
                      "--changelog", w.path("log"), "--json"});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out) == json{{"inputs", 25}, {"dropped", 15}, {"survivors", 10}, {"standard", 17}});
  CHECK(slurp(w.path("std")) == slurp(fixtures + "expected_standard.jsonl"));
  CHECK(slurp(w.path("drops")) == slurp(fixtures + "expected_drops.jsonl"));
  CHECK(slurp(w.path("log")) == slurp(fixtures + "expected_changelog.jsonl"));
}

TEST_CASE("render writes images and placements") {
  Workspace w;
  Image img(240, 180, 3);
  write_png(w.path("page.png"), img);
  const auto manifest = w.write(
      "m.jsonl",
      R"({"image_id":"p1","molecules":[{"mol_index":1,"bbox":[40,40,100,100]},{"mol_index":2,"bbox":[140,40,200,100]}],"draw":[{"mol_index":1,"text":"1"},{"mol_index":2,"text":"2a"},{"mol_index":3,"text":"3"}]})"
      "\n");
  const auto r = cli({"render", "--image", w.path("page.png"), "--manifest", manifest, "--out-dir", w.path("out"),
                      "--json"});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out) == json{{"images", 1}, {"placed", 2}, {"spiral_fallback", 0}, {"errors", 1}});
  const auto out = read_png(w.path("out/p1.png"));
  CHECK(out.width == 240);
  CHECK(out.channels == 3);
  CHECK_FALSE(out == img);
  const auto line = json::parse(slurp(w.path("out/placements.jsonl")));
  CHECK(line["placements"].size() == 2);
  CHECK(line["errors"][0]["error"] == "unknown mol_index");

  CHECK(cli({"render", "--manifest", manifest, "--out-dir", w.path("o2")}).code == kExitDataError);
  CHECK(cli({"render", "--manifest", manifest, "--out-dir", w.path("o3"), "--image", w.path("page.png"),
             "--ink-threshold", "2"})
            .code == kExitUsage);
}

TEST_CASE("join writes joined lines and orphans") {
  Workspace w;
  const auto visual = w.write(
      "v.lines",
      R"({"image_id":"a","prediction":[{"reactants":["1"],"conditions":[{"type":"text","value":"NaQH"}],"products":["2"]},{"reactants":["8"],"products":["9"]}]})"
      "\n");
  const auto textual = w.write(
      "t.lines",
      R"({"title":"Example 2","id":"2","procedure":{"paragraph":"x","substances":[{"idx":0,"content":"1","is_identifier":true,"role":"reactant"},{"idx":1,"content":"NaOH","role":"reagent"}],"reactants":[0],"reagents":[1],"products":[{"content":"2","is_identifier":true,"yield_ratio":"70%"}],"stages":[{"stage_id":1,"substances":[0,1],"time":"3 h"}]}})"
      "\n");
  const auto r = cli({"join", "--visual", visual, "--textual", textual, "--out", w.path("j"), "--json"});
  REQUIRE(r.code == kExitOk);
  const auto report = json::parse(r.out);
  CHECK(report["joined"] == 1);
  CHECK(report["refinements"] == 1);
  CHECK(report["visual_orphans"].size() == 1);
  const auto joined = json::parse(slurp(w.path("j")));
  CHECK(joined["refinements"][0]["replacement"] == "NaOH");
  CHECK(joined["enrichments"]["yield_ratio"][0]["value"] == "70%");
  CHECK(joined["enrichments"]["time"][0]["stage_id"] == 1);
  CHECK(cli({"join", "--visual", visual, "--textual", textual, "--out", w.path("j"), "--ned-gate", "-1"}).code ==
        kExitUsage);
}

TEST_CASE("serve rejects a bad port variable and reports a failed load") {
  Workspace w;
  ::setenv("RXN_REWARD_PORT", "not-a-port", 1);
  CHECK(cli({"serve", "--gt", "x"}).code == kExitUsage);
  ::setenv("RXN_REWARD_PORT", "0", 1);
  const auto r = cli({"serve", "--gt", w.path("missing.lines")});
  ::unsetenv("RXN_REWARD_PORT");
  CHECK(r.code == kExitDataError);
  CHECK(r.out.find("listening on 127.0.0.1:") != std::string::npos);
  CHECK(r.err.find("cannot open") != std::string::npos);
}
