#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "rxnkit/text_refine.hpp"

using namespace rxnkit::refine;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kDir = std::string(RXNKIT_FIXTURES) + "/refine/";

struct Run {
  std::string standard, drops, changelog;
  FunnelStats stats;
};

Run run(const std::string& input, unsigned jobs = 1) {
  std::istringstream in(input);
  std::ostringstream s, d, c;
  Run r;
  r.stats = refine_stream(in, s, d, c, jobs);
  r.standard = s.str();
  r.drops = d.str();
  r.changelog = c.str();
  return r;
}

TextualRecord compliant() {
  return record_from_json(ojson::parse(R"({"title":"Example 1","id":"1","iupac_name":"",
    "procedure":{"paragraph":"Stirred at RT for 2 h.",
      "substances":[{"idx":0,"content":"1a","chemical_name":"amine","is_identifier":true,"role":"reactant"},
                    {"idx":1,"content":"THF","chemical_name":"THF","is_identifier":false,"role":"solvent"}],
      "reactants":[0],"catalyst":[],"reagents":[],"solvent":[1],
      "products":[{"content":"2a","yield_ratio":"85%","chemical_name":"amide","is_identifier":true}],
      "stages":[]}})"));
}

}  // namespace

TEST_CASE("golden refinement fixture is byte-exact") {
  const Run r = run(slurp(kDir + "input.jsonl"));
  CHECK(r.standard == slurp(kDir + "expected_standard.jsonl"));
  CHECK(r.drops == slurp(kDir + "expected_drops.jsonl"));
  CHECK(r.changelog == slurp(kDir + "expected_changelog.jsonl"));
  CHECK(r.stats.inputs == 25);
  CHECK(r.stats.dropped == 15);
  CHECK(r.stats.survivors == 10);
  CHECK(r.stats.standard == 17);
  CHECK(r.stats.inputs == r.stats.dropped + r.stats.survivors);
  // parallel execution keeps input order
  CHECK(run(slurp(kDir + "input.jsonl"), 4).standard == r.standard);
}

TEST_CASE("refining standard output is the identity") {
  const Run first = run(slurp(kDir + "input.jsonl"));
  const Run second = run(first.standard);
  CHECK(second.standard == first.standard);
  CHECK(second.drops.empty());
  CHECK(second.changelog.empty());
  std::istringstream lines(first.standard);
  std::string line;
  while (std::getline(lines, line)) {
    const auto rec = record_from_json(ojson::parse(line));
    CHECK(validate_record(rec).empty());
    CHECK(autocorrect(rec).changes.empty());
  }
}

TEST_CASE("every drop rule is covered by the fixture") {
  const std::string drops = slurp(kDir + "expected_drops.jsonl");
  for (auto r : {DropReason::malformed_json, DropReason::schema_violation, DropReason::missing_procedure,
                 DropReason::paragraph_too_short, DropReason::empty_substances, DropReason::empty_reactants,
                 DropReason::empty_products, DropReason::missing_identifier, DropReason::idx_discontinuous,
                 DropReason::missing_substance_fields, DropReason::extraneous_substance_keys,
                 DropReason::invalid_role, DropReason::dangling_idx_reference, DropReason::yield_exceeds_100,
                 DropReason::role_unassignable}) {
    CHECK_MESSAGE(drops.find("\"" + std::string(to_string(r)) + "\"") != std::string::npos, to_string(r));
  }
  const std::string log = slurp(kDir + "expected_changelog.jsonl");
  for (const char* rule : {"fill_chemical_name", "role_alignment", "role_from_array", "fission"}) {
    CHECK_MESSAGE(log.find(rule) != std::string::npos, rule);
  }
}

TEST_CASE("validate_record examples") {
  CHECK(validate_record(compliant()).empty());

  auto r = compliant();
  r.procedure->products[0].yield_ratio = "105%";
  CHECK(validate_record(r) == std::vector{DropReason::yield_exceeds_100});

  r = compliant();
  r.procedure->substances.push_back(r.procedure->substances[1]);
  r.procedure->substances[1].idx = 2;
  r.procedure->substances[2].idx = 3;
  r.procedure->solvent = {2};
  CHECK(validate_record(r) == std::vector{DropReason::idx_discontinuous});

  r = compliant();
  r.procedure->paragraph = "  Stirred   overnight ";
  CHECK(validate_record(r) == std::vector{DropReason::paragraph_too_short});
  r.procedure->paragraph = "Stirred -- overnight";  // the hyphen run is not a word
  CHECK(validate_record(r) == std::vector{DropReason::paragraph_too_short});

  r = compliant();
  r.id = "";
  CHECK(validate_record(r) == std::vector{DropReason::missing_identifier});
  r.iupac_name = "N-benzylamide";
  CHECK(validate_record(r).empty());

  r = compliant();
  r.procedure.reset();
  CHECK(validate_record(r) == std::vector{DropReason::missing_procedure});

  r = compliant();
  r.procedure->products[0].yield_ratio = "quant.";
  CHECK(validate_record(r).empty());
  r.procedure->products[0].yield_ratio = "100%";
  CHECK(validate_record(r).empty());
}

TEST_CASE("parse_yield takes the first number") {
  CHECK(parse_yield("85%") == 85.0);
  CHECK(parse_yield("yield 92.5 % (2 steps)") == 92.5);
  CHECK(parse_yield("100.1%") == 100.1);
  CHECK_FALSE(parse_yield("quant.").has_value());
  CHECK_FALSE(parse_yield("").has_value());
}

TEST_CASE("autocorrect examples") {
  auto r = compliant();
  r.procedure->substances[1].chemical_name = "";
  r.procedure->substances[1].content = "MeOH";
  const auto c = autocorrect(r);
  CHECK(c.record.procedure->substances[1].chemical_name == "MeOH");
  CHECK(c.changes.size() == 1);

  r = compliant();
  r.procedure->solvent = {};
  const auto appended = autocorrect(r);
  CHECK(appended.record.procedure->solvent == std::vector<std::int64_t>{1});
  CHECK_FALSE(appended.drop);

  r = compliant();
  r.procedure->solvent = {};
  r.procedure->substances[1].role.reset();
  CHECK(autocorrect(r).drop == DropReason::role_unassignable);
}

TEST_CASE("autocorrect rule table over every two-array conflict") {
  // Oracle restated from the rule table: membership wins; with two arrays
  // the one named by the attribute wins, otherwise the earlier array.
  const std::vector<std::string> roles = {"reactant", "catalyst", "reagent", "solvent"};
  const std::vector<std::optional<std::string>> attrs = {"reactant", "catalyst", "reagent", "solvent", "",
                                                         std::nullopt};
  const auto arr = [](Procedure& p, int k) -> std::vector<std::int64_t>& {
    switch (k) {
      case 0: return p.reactants;
      case 1: return p.catalyst;
      case 2: return p.reagents;
      default: return p.solvent;
    }
  };
  int cases = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (const auto& attr : attrs) {
        auto r = compliant();
        Procedure& p = *r.procedure;
        p.substances[1].role = attr;
        p.solvent.clear();
        arr(p, a).push_back(1);
        if (b != a) arr(p, b).push_back(1);
        int expected = std::min(a, b);
        for (int k = 0; k < 4; ++k) {
          if (attr == roles[static_cast<std::size_t>(k)] && (k == a || k == b)) expected = k;
        }
        auto c = autocorrect(r);
        REQUIRE_FALSE(c.drop);
        Procedure& q = *c.record.procedure;
        for (int k = 0; k < 4; ++k) {
          const bool has = std::count(arr(q, k).begin(), arr(q, k).end(), 1) == 1;
          CHECK(has == (k == expected));
        }
        CHECK(q.substances[1].role == roles[static_cast<std::size_t>(expected)]);
        CHECK(std::count(q.reactants.begin(), q.reactants.end(), 0) == 1);
        CHECK(validate_record(c.record).empty());
        CHECK(autocorrect(c.record).changes.empty());
        ++cases;
      }
    }
  }
  CHECK(cases == 96);
}

TEST_CASE("sanitizer leaves legitimate nomenclature alone") {
  for (const char* name : {"trans-1,2-diol", "N,N-dimethylformamide", "tert-butyl 4-oxopiperidine-1-carboxylate",
                           "(S)-2-amino-3-phenylpropanoic acid", "1H-indole-3-carbaldehyde", "[13C]-labeled benzene",
                           "-78 °C", "Boc-L-Pro-OH", "bis(2-methoxyethyl) ether", "2'-deoxyadenosine",
                           "Pd(PPh3)4", "5-(4-fluorophenyl)-1H-tetrazole", "14C-label", "E/Z-mixture",
                           "sodium 2-ethylhexanoate", "10 °C to -5 °C"}) {
    CHECK(sanitize_text(name) == name);
  }
}

TEST_CASE("sanitizer fixes typography") {
  CHECK(sanitize_text("13C-labeled benzene") == "[13C]-labeled benzene");
  CHECK(sanitize_text("a 13C-labeled and 2H-labeled sample") == "a [13C]-labeled and 2H-labeled sample");
  CHECK(sanitize_text("“dry” THF") == "\"dry\" THF");
  CHECK(sanitize_text("2′-deoxy") == "2'-deoxy");
  CHECK(sanitize_text("‘quoted’") == "'quoted'");
  CHECK(sanitize_text("4‐bromo") == "4-bromo");
  CHECK(sanitize_text("ethyl---acetate") == "ethyl-acetate");
  CHECK(sanitize_text("washed - dried") == "washed dried");
  CHECK(sanitize_text("  a  b\t ") == "a b");
}

TEST_CASE("sanitizer is idempotent") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pieces = {"-", " ", "  ", "13", "C-labeled", "[", "a", "’", "“", "‐",
                                           " ", "and", "7", "x-y", "--", " - "};
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) s += pieces[rng() % pieces.size()];
    const std::string once = sanitize_text(s);
    CHECK(sanitize_text(once) == once);
  }
}

TEST_CASE("fission") {
  auto r = compliant();
  r.iupac_name = "methyl ester and ethyl ester";
  const auto parts = canonicalize_and_split(r);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].iupac_name == "methyl ester");
  CHECK(parts[1].iupac_name == "ethyl ester");
  CHECK(parts[0].procedure == parts[1].procedure);

  r.iupac_name = "acid and -";
  CHECK(canonicalize_and_split(r).size() == 1);
  r.iupac_name = "sandwich complex";  // no standalone conjunction
  CHECK(canonicalize_and_split(r).size() == 1);
  r.iupac_name = "A and B";
  r.procedure->stages.push_back(Stage{});
  r.procedure->stages[0].workup = "acid and base wash";
  const auto split = canonicalize_and_split(r);
  REQUIRE(split.size() == 2);
  CHECK(split[0].procedure->stages[0].workup == "acid and base wash");
}

TEST_CASE("refine_stream conservation") {
  const std::string good = to_json(compliant()).dump();
  auto splitting = compliant();
  splitting.iupac_name = "X1 and Y1";
  std::string input;
  for (int i = 0; i < 7; ++i) input += good + "\n";
  input += to_json(splitting).dump() + "\n";
  input += "{\"id\": 3}\n";
  input += "not json\n";
  const Run r = run(input);
  CHECK(r.stats.inputs == 10);
  CHECK(r.stats.dropped == 2);
  CHECK(r.stats.standard == 9);

  const Run empty = run("");
  CHECK(empty.stats.inputs == 0);
  CHECK(empty.standard.empty());
  CHECK(empty.drops.empty());
}

TEST_CASE("keyword dependencies are schema checked") {
  CHECK(dependency_from_json(ojson::array({"General Procedure I", "method"})).kind == DependencyKind::method);
  CHECK(dependency_from_json(ojson::array({"__last_compound__", "last_compound"})).kind ==
        DependencyKind::last_compound);
  CHECK_THROWS_AS(dependency_from_json(ojson::array({"Example 3", "chapter"})), SchemaError);
  CHECK_THROWS_AS(dependency_from_json(ojson::array({"Example 3", "last_compound"})), SchemaError);
  CHECK_THROWS_AS(dependency_from_json(ojson::array({"Example 3"})), SchemaError);
}
