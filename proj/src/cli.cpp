#include "rxnkit/cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rxnkit/corpus_eval.hpp"
#include "rxnkit/crossmodal_join.hpp"
#include "rxnkit/ink_renderer.hpp"
#include "rxnkit/parallel.hpp"
#include "rxnkit/reward.hpp"
#include "rxnkit/reward_service.hpp"
#include "rxnkit/serialization_analyzer.hpp"
#include "rxnkit/text_refine.hpp"
#include "rxnkit/text_util.hpp"

namespace rxnkit {

namespace {

namespace fs = std::filesystem;

/// Bad input data or an unreadable file; exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A flag value outside its allowed range; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  double iou = 0.5;
  double ned = 0.2;
  std::string ratio = "1:1";
  bool json = false;
  unsigned jobs = 1;
  int verbosity = 0;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

OutputFormat format_flag(const std::string& s) {
  const auto f = parse_format(s);
  if (!f) throw UsageError("--format: unknown format '" + s + "' (expected bros, bivp or idtvp)");
  return *f;
}

void check_thresholds(const Global& g) {
  if (!(g.iou > 0.0 && g.iou <= 1.0)) throw UsageError("--iou must lie in (0, 1]");
  if (!(g.ned >= 0.0 && g.ned < 1.0)) throw UsageError("--ned must lie in [0, 1)");
}

RewardSpec spec_from(const Global& g) {
  check_thresholds(g);
  std::pair<double, double> parts;
  try {
    parts = parse_ratio(g.ratio);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--ratio: ") + e.what());
  }
  return RewardSpec::from_ratio(parts.first, parts.second, g.iou, g.ned);
}

std::map<std::string, IdentifierMap> maps_from(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_in(path);
  return load_map_lines(in);
}

std::vector<DiagramAnnotation> gt_from(const std::string& path) {
  auto in = open_in(path);
  return read_ground_truth_lines(in);
}

std::vector<PredictionRecord> preds_from(const std::string& path) {
  auto in = open_in(path);
  return read_prediction_lines(in);
}

// --- validate -------------------------------------------------------------

struct ValidateArgs {
  std::string gt, pred, map, format;
};

int cmd_validate(const ValidateArgs& a, const Global& g, std::ostream& out) {
  if (a.gt.empty() && a.pred.empty() && a.map.empty()) {
    throw UsageError("validate needs at least one of --gt, --pred, --map");
  }
  json report = json::object();
  bool ok = true;
  if (!a.gt.empty()) {
    auto in = open_in(a.gt);
    std::string line;
    std::size_t records = 0;
    json errors = json::array();
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (trim(line).empty()) continue;
      ++records;
      try {
        parse_ground_truth(line);
      } catch (const ParseError& e) {
        errors.push_back({{"line", n}, {"error", e.what()}});
      }
    }
    ok = ok && errors.empty();
    report["gt"] = {{"records", records}, {"invalid", errors.size()}, {"errors", errors}};
  }
  if (!a.pred.empty()) {
    const auto recs = preds_from(a.pred);
    const std::optional<OutputFormat> fallback =
        a.format.empty() ? std::nullopt : std::optional<OutputFormat>(format_flag(a.format));
    json failures = {{"syntax", 0}, {"schema", 0}, {"empty", 0}};
    json errors = json::array();
    for (const auto& r : recs) {
      const auto f = r.format ? r.format : fallback;
      if (!f) {
        errors.push_back({{"sample_id", r.sample_id}, {"error", "no format given and no --format default"}});
        continue;
      }
      const auto parsed = parse_prediction(r.raw, *f);
      if (const auto* fail = std::get_if<ParseFailure>(&parsed)) {
        const std::string cls(to_string(fail->failure));
        failures[cls] = failures[cls].get<int>() + 1;
        errors.push_back({{"sample_id", r.sample_id}, {"failure", cls}, {"error", fail->message}});
      }
    }
    ok = ok && errors.empty();
    report["pred"] = {{"records", recs.size()}, {"invalid", errors.size()}, {"failures", failures}, {"errors", errors}};
  }
  if (!a.map.empty()) {
    const auto maps = maps_from(a.map);
    report["map"] = {{"images", maps.size()}, {"invalid", 0}};
  }
  if (g.json) {
    out << report.dump(2) << "\n";
  } else {
    for (const char* key : {"gt", "pred", "map"}) {
      if (!report.contains(key)) continue;
      const auto& r = report[key];
      out << key << ": " << (r.contains("records") ? r["records"] : r["images"]) << " records, " << r["invalid"]
          << " invalid\n";
      if (r.contains("errors")) {
        for (const auto& e : r["errors"]) {
          out << "  " << (e.contains("line") ? "line " + e["line"].dump() : e["sample_id"].get<std::string>())
              << ": " << e["error"].get<std::string>() << "\n";
        }
      }
    }
  }
  return ok ? kExitOk : kExitDataError;
}

// --- evaluate / reward / analyze-order --------------------------------------

struct CorpusArgs {
  std::string gt, pred, map, format, report;
  bool per_image = false;
};

EvalOptions eval_options(const CorpusArgs& a, const Global& g, const std::map<std::string, IdentifierMap>* maps) {
  check_thresholds(g);
  EvalOptions o;
  o.iou_threshold = g.iou;
  o.ned_threshold = g.ned;
  if (!a.format.empty()) o.default_format = format_flag(a.format);
  o.maps = maps;
  o.jobs = g.jobs;
  return o;
}

int cmd_evaluate(const CorpusArgs& a, const Global& g, std::ostream& out) {
  const auto maps = maps_from(a.map);
  const auto options = eval_options(a, g, a.map.empty() ? nullptr : &maps);
  const auto report = evaluate_corpus(gt_from(a.gt), preds_from(a.pred), options);
  if (g.json) out << to_json(report, a.per_image).dump(2) << "\n";
  else out << format_report(report);
  return kExitOk;
}

int cmd_reward(const CorpusArgs& a, const Global& g, std::ostream& out) {
  const RewardSpec spec = spec_from(g);
  const std::optional<OutputFormat> fallback =
      a.format.empty() ? std::nullopt : std::optional<OutputFormat>(format_flag(a.format));
  auto gt_in = open_in(a.gt);
  const GtStore store = GtStore::from_lines(gt_in, maps_from(a.map));
  const auto preds = preds_from(a.pred);
  std::vector<const GtStore::Item*> items;
  for (const auto& p : preds) {
    const auto* item = store.find(p.image_id);
    if (!item) throw DataError("prediction " + p.sample_id + " names unknown image_id " + p.image_id);
    if (!p.format && !fallback) throw DataError("prediction " + p.sample_id + " has no format and no --format");
    items.push_back(item);
  }
  std::vector<RewardResult> results(preds.size());
  parallel_for(preds.size(), g.jobs, [&](std::size_t i) {
    results[i] = sample_reward(preds[i].raw, items[i]->annotation, items[i]->map,
                               preds[i].format ? *preds[i].format : *fallback, spec);
  });
  double sum = 0.0;
  for (const auto& r : results) sum += r.reward;
  const double mean = results.empty() ? 0.0 : sum / static_cast<double>(results.size());
  if (g.json) {
    json samples = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      json s = to_json(results[i]);
      s["sample_id"] = preds[i].sample_id;
      s["image_id"] = preds[i].image_id;
      samples.push_back(std::move(s));
    }
    out << json{{"spec", spec.to_json()}, {"samples", samples}, {"mean_reward", mean}}.dump(2) << "\n";
  } else {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %-16s %8s %8s %8s  %s\n", "sample_id", "image_id", "reward", "soft",
                  "hybrid", "parse");
    out << buf;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      std::snprintf(buf, sizeof buf, "%-16s %-16s %8.4f %8.4f %8.4f  %s\n", preds[i].sample_id.c_str(),
                    preds[i].image_id.c_str(), r.reward, r.soft_component, r.hybrid_component,
                    r.parse_ok ? "ok" : std::string(to_string(r.failure->failure)).c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "mean reward over %zu samples: %.4f\n", results.size(), mean);
    out << buf;
  }
  return kExitOk;
}

int cmd_analyze_order(const CorpusArgs& a, const Global& g, std::ostream& out) {
  const auto maps = maps_from(a.map);
  const auto options = eval_options(a, g, a.map.empty() ? nullptr : &maps);
  const auto report = corpus_rates(gt_from(a.gt), preds_from(a.pred), options);
  const std::string text = g.json ? to_json(report).dump(2) + "\n" : format_order_report(report);
  if (!a.report.empty()) open_out(a.report) << text;
  out << text;
  return kExitOk;
}

// --- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string gt, map, host = "127.0.0.1", format = "idtvp";
  int port = 8080;
  std::size_t max_batch = 512;
};

int cmd_serve(const ServeArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  ServiceConfig cfg;
  cfg.spec = spec_from(g);
  cfg.max_batch = a.max_batch;
  cfg.default_format = format_flag(a.format);
  cfg.jobs = g.jobs;
  if (a.max_batch == 0) throw UsageError("--max-batch must be positive");
  int port = a.port;
  if (const char* env = std::getenv("RXN_REWARD_PORT"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0 || v > 65535) throw UsageError("RXN_REWARD_PORT is not a port number");
    port = static_cast<int>(v);
  }
  if (port < 0 || port > 65535) throw UsageError("--port must lie in [0, 65535]");

  // Signals are handled by a dedicated thread so the server can be stopped
  // outside signal context.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  RewardServer server(cfg);
  const int bound = server.start(a.host, port);
  if (bound <= 0) {
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    throw DataError("cannot bind " + a.host + ":" + std::to_string(port));
  }
  out << "listening on " << a.host << ":" << bound << std::endl;

  const pthread_t main_thread = pthread_self();
  std::atomic<bool> load_failed{false};
  std::string load_error;
  std::thread loader([&] {
    try {
      auto gt_in = open_in(a.gt);
      auto store = std::make_shared<const GtStore>(GtStore::from_lines(gt_in, maps_from(a.map)));
      const auto n = store->size();
      server.publish(std::move(store));
      if (g.verbosity > 0) err << "ground truth ready: " << n << " images" << std::endl;
    } catch (const std::exception& e) {
      load_error = e.what();
      load_failed = true;
      pthread_kill(main_thread, SIGTERM);
    }
  });
  int sig = 0;
  sigwait(&signals, &sig);
  loader.join();
  server.stop();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  if (load_failed) {
    err << "error: " << load_error << "\n";
    return kExitDataError;
  }
  out << "shutting down" << std::endl;
  return kExitOk;
}

// --- render ---------------------------------------------------------------

struct RenderArgs {
  std::string image, manifest, out_dir;
  double ink_threshold = 0.01;
  int min_glyph = 8;
};

int cmd_render(const RenderArgs& a, const Global& g, std::ostream& out) {
  render::RenderConfig cfg;
  cfg.ink_threshold = a.ink_threshold;
  cfg.min_glyph = a.min_glyph;
  if (cfg.max_default_glyph < cfg.min_glyph) cfg.max_default_glyph = cfg.min_glyph;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--ink-threshold/--min-glyph: ") + e.what());
  }
  auto in = open_in(a.manifest);
  const auto jobs = render::read_manifest(in);
  const fs::path base = fs::path(a.manifest).parent_path();
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw DataError("cannot create " + a.out_dir + ": " + ec.message());

  std::vector<std::string> image_paths;
  for (const auto& job : jobs) {
    if (job.image) image_paths.push_back(fs::path(*job.image).is_absolute() ? *job.image : (base / *job.image).string());
    else if (!a.image.empty()) image_paths.push_back(a.image);
    else throw DataError("manifest entry " + job.image_id + " names no image and --image is not set");
  }
  std::vector<json> entries(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), g.jobs, [&](std::size_t i) {
    try {
      const auto img = read_png(image_paths[i]);
      const auto r = render::render_all(img, jobs[i].molecules, jobs[i].existing_labels, jobs[i].draw, cfg);
      write_png((fs::path(a.out_dir) / (jobs[i].image_id + ".png")).string(), r.image);
      entries[i] = render::manifest_entry(jobs[i].image_id, r);
    } catch (const ImageError& e) {
      failures[i] = jobs[i].image_id + ": " + e.what();
    }
  });
  for (const auto& f : failures) {
    if (!f.empty()) throw DataError(f);
  }
  auto placements = open_out((fs::path(a.out_dir) / "placements.jsonl").string());
  std::size_t placed = 0, spiral = 0, impossible = 0;
  for (const auto& e : entries) {
    placements << e.dump() << "\n";
    placed += e["placements"].size();
    impossible += e["errors"].size();
    for (const auto& p : e["placements"]) spiral += p["method"] == "spiral_fallback" ? 1 : 0;
  }
  const json summary{{"images", jobs.size()}, {"placed", placed}, {"spiral_fallback", spiral}, {"errors", impossible}};
  if (g.json) out << summary.dump(2) << "\n";
  else {
    out << "images: " << jobs.size() << "  placed: " << placed << " (" << spiral
        << " by spiral fallback)  errors: " << impossible << "\n";
  }
  return kExitOk;
}

// --- refine / join --------------------------------------------------------

struct RefineArgs {
  std::string in, out, drops, changelog;
};

int cmd_refine(const RefineArgs& a, const Global& g, std::ostream& out) {
  auto in = open_in(a.in);
  auto standard = open_out(a.out);
  auto drops = open_out(a.drops);
  auto changelog = open_out(a.changelog);
  const auto s = refine::refine_stream(in, standard, drops, changelog, g.jobs);
  const json summary{{"inputs", s.inputs}, {"dropped", s.dropped}, {"survivors", s.survivors}, {"standard", s.standard}};
  if (g.json) out << summary.dump(2) << "\n";
  else {
    out << "inputs: " << s.inputs << "  dropped: " << s.dropped << "  survivors: " << s.survivors
        << "  standard records: " << s.standard << "\n";
  }
  return kExitOk;
}

struct JoinArgs {
  std::string visual, textual, out, orphans;
  double ned_gate = 0.3;
};

int cmd_join(const JoinArgs& a, const Global& g, std::ostream& out) {
  if (!(a.ned_gate >= 0.0 && a.ned_gate <= 1.0)) throw UsageError("--ned-gate must lie in [0, 1]");
  auto vin = open_in(a.visual);
  auto tin = open_in(a.textual);
  const auto visual = join::read_visual(vin);
  const auto textual = join::read_textual(tin);
  const auto r = join::run(visual, textual, a.ned_gate, g.jobs);
  auto joined = open_out(a.out);
  std::size_t refinements = 0, flags = 0;
  for (const auto& j : r.joined) {
    joined << join::to_json(j, textual).dump() << "\n";
    refinements += j.refinements.size();
    flags += j.flags.size();
  }
  json report = join::orphan_report(r, visual, textual);
  report["refinements"] = refinements;
  report["low_confidence"] = flags;
  if (!a.orphans.empty()) open_out(a.orphans) << report.dump(2) << "\n";
  if (g.json) out << report.dump(2) << "\n";
  else {
    out << "joined: " << r.joined.size() << "  visual orphans: " << r.visual_orphans.size()
        << "  textual orphans: " << r.textual_orphans.size() << "  refinements: " << refinements
        << "  low-confidence: " << flags << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reaction diagram parsing toolkit: evaluation, rewards, rendering and text refinement"};
  app.require_subcommand(1);
  Global g;
  const auto add_globals = [&](CLI::App* sub) {
    sub->add_flag("--json", g.json, "Machine-readable output");
    sub->add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_flag("-v,--verbose", "More diagnostics on stderr");
  };
  const auto add_thresholds = [&](CLI::App* sub) {
    sub->add_option("--iou", g.iou, "IoU threshold for molecule boxes")->capture_default_str();
    sub->add_option("--ned", g.ned, "Normalized edit distance threshold for text")->capture_default_str();
  };

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check ground-truth, prediction or map files");
  validate->add_option("--gt", va.gt, "Ground-truth lines");
  validate->add_option("--pred", va.pred, "Prediction lines");
  validate->add_option("--map", va.map, "Identifier map lines");
  validate->add_option("--format", va.format, "Format for predictions that do not name one");
  add_globals(validate);

  CorpusArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Soft and hybrid match P/R/F1 over a corpus");
  evaluate->add_option("--gt", ea.gt, "Ground-truth lines")->required();
  evaluate->add_option("--pred", ea.pred, "Prediction lines")->required();
  evaluate->add_option("--format", ea.format, "Format for predictions that do not name one");
  evaluate->add_option("--map", ea.map, "Detector identifier maps");
  evaluate->add_flag("--per-image", ea.per_image, "Include per-image counts in --json output");
  add_thresholds(evaluate);
  add_globals(evaluate);

  CorpusArgs ra;
  auto* reward = app.add_subcommand("reward", "Per-sample rewards and their mean");
  reward->add_option("--gt", ra.gt, "Ground-truth lines")->required();
  reward->add_option("--pred", ra.pred, "Prediction lines")->required();
  reward->add_option("--format", ra.format, "Format for predictions that do not name one");
  reward->add_option("--map", ra.map, "Detector identifier maps");
  reward->add_option("--ratio", g.ratio, "Soft:hybrid weighting")->capture_default_str();
  add_thresholds(reward);
  add_globals(reward);

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Reward service over HTTP");
  serve->add_option("--gt", sa.gt, "Ground-truth lines")->required();
  serve->add_option("--map", sa.map, "Detector identifier maps");
  serve->add_option("--host", sa.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sa.port, "Port (RXN_REWARD_PORT overrides)")->capture_default_str();
  serve->add_option("--ratio", g.ratio, "Soft:hybrid weighting")->capture_default_str();
  serve->add_option("--max-batch", sa.max_batch, "Largest accepted batch")->capture_default_str();
  serve->add_option("--format", sa.format, "Default sample format")->capture_default_str();
  add_thresholds(serve);
  add_globals(serve);

  RenderArgs rn;
  auto* render_cmd = app.add_subcommand("render", "Draw identifiers next to molecules");
  render_cmd->add_option("--image", rn.image, "Image for manifest entries without one");
  render_cmd->add_option("--manifest", rn.manifest, "Render manifest lines")->required();
  render_cmd->add_option("--out-dir", rn.out_dir, "Output directory")->required();
  render_cmd->add_option("--ink-threshold", rn.ink_threshold, "Largest ink fraction under a label")
      ->capture_default_str();
  render_cmd->add_option("--min-glyph", rn.min_glyph, "Smallest glyph height in pixels")->capture_default_str();
  add_globals(render_cmd);

  RefineArgs fa;
  auto* refine_cmd = app.add_subcommand("refine", "Validate, correct and split textual records");
  refine_cmd->add_option("--in", fa.in, "Raw record lines")->required();
  refine_cmd->add_option("--out", fa.out, "Standard record lines")->required();
  refine_cmd->add_option("--drops", fa.drops, "Dropped record lines")->required();
  refine_cmd->add_option("--changelog", fa.changelog, "Correction log lines")->required();
  add_globals(refine_cmd);

  JoinArgs ja;
  auto* join_cmd = app.add_subcommand("join", "Join diagram reactions with textual records");
  join_cmd->add_option("--visual", ja.visual, "Parsed diagram lines")->required();
  join_cmd->add_option("--textual", ja.textual, "Standard record lines")->required();
  join_cmd->add_option("--out", ja.out, "Joined reaction lines")->required();
  join_cmd->add_option("--ned-gate", ja.ned_gate, "Largest edit distance that is auto-corrected")
      ->capture_default_str();
  join_cmd->add_option("--orphans", ja.orphans, "Write the orphan report here");
  add_globals(join_cmd);

  CorpusArgs oa;
  auto* order = app.add_subcommand("analyze-order", "Serialization-order errors among perfect predictions");
  order->add_option("--gt", oa.gt, "Ground-truth lines")->required();
  order->add_option("--pred", oa.pred, "Prediction lines")->required();
  order->add_option("--report", oa.report, "Write the report here");
  order->add_option("--format", oa.format, "Format for predictions that do not name one");
  order->add_option("--map", oa.map, "Detector identifier maps");
  add_thresholds(order);
  add_globals(order);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  g.verbosity = static_cast<int>(app.get_subcommands().front()->count("--verbose"));
  const auto started = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    if (*validate) code = cmd_validate(va, g, out);
    else if (*evaluate) code = cmd_evaluate(ea, g, out);
    else if (*reward) code = cmd_reward(ra, g, out);
    else if (*serve) code = cmd_serve(sa, g, out, err);
    else if (*render_cmd) code = cmd_render(rn, g, out);
    else if (*refine_cmd) code = cmd_refine(fa, g, out);
    else if (*join_cmd) code = cmd_join(ja, g, out);
    else if (*order) code = cmd_analyze_order(oa, g, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  if (g.verbosity > 0) {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    err << "done in " << ms << " ms\n";
  }
  return code;
}

}  // namespace rxnkit
