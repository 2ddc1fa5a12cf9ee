#pragma once

#include <atomic>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "rxnkit/identifier_map.hpp"
#include "rxnkit/reaction_model.hpp"
#include "rxnkit/reward.hpp"

namespace httplib {
class Server;
}

namespace rxnkit {

/// Read-only ground truth keyed by image_id, each with the identifier map
/// used for idtvp/bivp resolution.
class GtStore {
 public:
  struct Item {
    DiagramAnnotation annotation;
    IdentifierMap map;
  };

  /// Throws ParseError / CorpusError on malformed lines or duplicate ids.
  static GtStore from_lines(std::istream& gt_lines);
  /// Maps are keyed by image_id; images without one use a GT-derived map.
  static GtStore from_lines(std::istream& gt_lines, const std::map<std::string, IdentifierMap>& maps);
  static GtStore from_annotations(std::vector<DiagramAnnotation> annotations,
                                  const std::map<std::string, IdentifierMap>& maps = {});

  const Item* find(const std::string& image_id) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::map<std::string, Item> items_;
};

/// Request-envelope problem; reported as HTTP 400.
class EnvelopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  RewardSpec spec;
  std::size_t max_batch = 512;
  OutputFormat default_format = OutputFormat::idtvp;
  unsigned jobs = 0;
};

/// Scores every sample of a request body independently. `store` may be null
/// when all samples carry inline ground truth. Throws EnvelopeError when the
/// envelope itself is malformed; per-sample problems become error markers
/// with reward 0.
json handle_reward_batch(const json& request, const GtStore* store, const ServiceConfig& config);

/// HTTP front end: POST /v1/reward and GET /v1/health.
class RewardServer {
 public:
  explicit RewardServer(ServiceConfig config);
  ~RewardServer();
  RewardServer(const RewardServer&) = delete;
  RewardServer& operator=(const RewardServer&) = delete;

  /// Installs the store and flips status to ready. Called once.
  void publish(std::shared_ptr<const GtStore> store);

  json health() const;

  /// Binds and serves on a background thread; returns the bound port.
  /// port 0 picks a free one.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread. Returns false if bind fails.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::shared_ptr<const GtStore> store_;
  std::atomic<bool> ready_{false};
};

}  // namespace rxnkit
