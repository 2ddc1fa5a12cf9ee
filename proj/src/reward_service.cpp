#include "rxnkit/reward_service.hpp"

#include <httplib.h>

#include <chrono>
#include <set>

#include "rxnkit/corpus_eval.hpp"
#include "rxnkit/parallel.hpp"

namespace rxnkit {

GtStore GtStore::from_lines(std::istream& gt_lines) { return from_lines(gt_lines, {}); }

GtStore GtStore::from_lines(std::istream& gt_lines,
                            const std::map<std::string, IdentifierMap>& maps) {
  return from_annotations(read_ground_truth_lines(gt_lines), maps);
}

GtStore GtStore::from_annotations(std::vector<DiagramAnnotation> annotations,
                                  const std::map<std::string, IdentifierMap>& maps) {
  GtStore store;
  for (auto& a : annotations) {
    auto it = maps.find(a.image_id);
    IdentifierMap map =
        it == maps.end() ? IdentifierMap::from_annotation(a) : it->second.with_boxes_from(a);
    const std::string id = a.image_id;
    if (!store.items_.emplace(id, Item{std::move(a), std::move(map)}).second) {
      throw CorpusError("duplicate image_id \"" + id + "\" in ground truth");
    }
  }
  return store;
}

const GtStore::Item* GtStore::find(const std::string& image_id) const {
  auto it = items_.find(image_id);
  return it == items_.end() ? nullptr : &it->second;
}

namespace {

RewardSpec spec_override(const json& j, const RewardSpec& base) {
  if (!j.is_object()) throw EnvelopeError("spec must be an object");
  double iou = base.hybrid.iou_threshold;
  double ned = base.hybrid.ned_threshold;
  double soft = base.soft_weight;
  double hybrid = base.hybrid_weight;
  try {
    if (j.contains("iou_threshold")) iou = j.at("iou_threshold").get<double>();
    if (j.contains("ned_threshold")) ned = j.at("ned_threshold").get<double>();
    if (j.contains("ratio")) {
      std::tie(soft, hybrid) = parse_ratio(j.at("ratio").get<std::string>());
    } else if (j.contains("soft_weight") || j.contains("hybrid_weight")) {
      soft = j.value("soft_weight", 0.0);
      hybrid = j.value("hybrid_weight", 0.0);
    }
    return RewardSpec::from_ratio(soft, hybrid, iou, ned);
  } catch (const json::exception& e) {
    throw EnvelopeError(std::string("bad spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw EnvelopeError(std::string("bad spec: ") + e.what());
  }
}

json error_result(const json& sample_id, const std::string& message) {
  return json{{"sample_id", sample_id}, {"reward", 0.0},    {"soft", 0.0},
              {"hybrid", 0.0},          {"parse_ok", false}, {"error", message}};
}

json score_sample(const json& sample, const GtStore* store, const RewardSpec& spec,
                  OutputFormat default_format) {
  const json& sid = sample.at("sample_id");
  OutputFormat format = default_format;
  if (auto it = sample.find("format"); it != sample.end()) {
    const auto f = it->is_string() ? parse_format(it->get<std::string>()) : std::nullopt;
    if (!f) return error_result(sid, "unknown format " + it->dump());
    format = *f;
  }
  auto raw_it = sample.find("raw");
  if (raw_it == sample.end() || !raw_it->is_string()) {
    return error_result(sid, "raw must be a string");
  }

  DiagramAnnotation inline_gt;
  const DiagramAnnotation* gt = nullptr;
  const IdentifierMap* map = nullptr;
  IdentifierMap inline_map;
  if (auto it = sample.find("gt"); it != sample.end()) {
    try {
      inline_gt = annotation_from_json(*it);
    } catch (const std::exception& e) {
      return error_result(sid, std::string("invalid inline gt: ") + e.what());
    }
    gt = &inline_gt;
    inline_map = IdentifierMap::from_annotation(inline_gt);
    map = &inline_map;
  } else if (auto id = sample.find("image_id"); id != sample.end() && id->is_string()) {
    const GtStore::Item* item = store == nullptr ? nullptr : store->find(id->get<std::string>());
    if (item == nullptr) return error_result(sid, "unknown image_id \"" + id->get<std::string>() + "\"");
    gt = &item->annotation;
    map = &item->map;
  } else {
    return error_result(sid, "sample needs image_id or inline gt");
  }
  if (auto it = sample.find("identifier_map"); it != sample.end()) {
    try {
      inline_map = map_from_json(*it).with_boxes_from(*gt);
    } catch (const std::exception& e) {
      return error_result(sid, std::string("invalid identifier_map: ") + e.what());
    }
    map = &inline_map;
  }

  const RewardResult r = sample_reward(raw_it->get_ref<const std::string&>(), *gt, *map, format, spec);
  json out{{"sample_id", sid},
           {"reward", r.reward},
           {"soft", r.soft_component},
           {"hybrid", r.hybrid_component},
           {"parse_ok", r.parse_ok}};
  if (r.failure) out["failure"] = std::string(to_string(r.failure->failure));
  if (!r.unresolved.empty()) out["unresolved"] = r.unresolved;
  return out;
}

}  // namespace

json handle_reward_batch(const json& request, const GtStore* store, const ServiceConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!request.is_object()) throw EnvelopeError("request body must be a JSON object");
  auto samples_it = request.find("samples");
  if (samples_it == request.end() || !samples_it->is_array()) {
    throw EnvelopeError("request needs a \"samples\" array");
  }
  const json& samples = *samples_it;
  if (samples.size() > config.max_batch) {
    throw EnvelopeError("batch of " + std::to_string(samples.size()) + " exceeds maximum " +
                        std::to_string(config.max_batch));
  }
  RewardSpec spec = config.spec;
  if (auto it = request.find("spec"); it != request.end() && !it->is_null()) {
    spec = spec_override(*it, config.spec);
  }
  OutputFormat default_format = config.default_format;
  if (auto it = request.find("format"); it != request.end()) {
    const auto f = it->is_string() ? parse_format(it->get<std::string>()) : std::nullopt;
    if (!f) throw EnvelopeError("unknown default format " + it->dump());
    default_format = *f;
  }

  std::set<std::string> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const json& s = samples[i];
    if (!s.is_object()) throw EnvelopeError("samples[" + std::to_string(i) + "] is not an object");
    auto sid = s.find("sample_id");
    if (sid == s.end() || !(sid->is_string() || sid->is_number_integer())) {
      throw EnvelopeError("samples[" + std::to_string(i) + "] needs a string or integer sample_id");
    }
    if (!seen.insert(sid->dump()).second) {
      throw EnvelopeError("duplicate sample_id " + sid->dump());
    }
  }

  std::vector<json> results(samples.size());
  parallel_for(samples.size(), config.jobs, [&](std::size_t i) {
    try {
      results[i] = score_sample(samples[i], store, spec, default_format);
    } catch (const std::exception& e) {
      results[i] = error_result(samples[i].at("sample_id"), e.what());
    }
  });

  json rewards = json::array();
  for (const auto& r : results) rewards.push_back(r.at("reward"));
  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return json{{"rewards", std::move(rewards)},
              {"results", std::move(results)},
              {"spec", spec.to_json()},
              {"timing", {{"elapsed_ms", elapsed}, {"samples", samples.size()}}}};
}

RewardServer::RewardServer(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  config_.spec.validate();
  install_routes();
}

RewardServer::~RewardServer() { stop(); }

void RewardServer::publish(std::shared_ptr<const GtStore> store) {
  store_ = std::move(store);
  ready_.store(true, std::memory_order_release);
}

json RewardServer::health() const {
  const bool ready = ready_.load(std::memory_order_acquire);
  return json{{"status", ready ? "ready" : "initializing"},
              {"loaded_gt_count", ready && store_ ? store_->size() : 0},
              {"max_batch", config_.max_batch},
              {"spec", config_.spec.to_json()}};
}

void RewardServer::install_routes() {
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health().dump(), "application/json");
  });
  server_->Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
    const auto fail = [&](int status, const std::string& message) {
      res.status = status;
      res.set_content(json{{"error", message}}.dump(), "application/json");
    };
    if (!ready_.load(std::memory_order_acquire)) {
      fail(503, "ground truth store is still loading");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      fail(400, "request body is not valid JSON");
      return;
    }
    try {
      res.set_content(handle_reward_batch(body, store_.get(), config_).dump(), "application/json");
    } catch (const EnvelopeError& e) {
      fail(400, e.what());
    } catch (const std::exception& e) {
      fail(500, e.what());
    }
  });
}

int RewardServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool RewardServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void RewardServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace rxnkit
