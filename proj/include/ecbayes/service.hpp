#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "ecbayes/config.hpp"
#include "ecbayes/dataio.hpp"
#include "ecbayes/regression.hpp"

namespace httplib {
class Server;
}

namespace ecbayes {

struct ServiceOptions {
  std::chrono::seconds session_ttl{3600};
  std::size_t max_payload_bytes = 5 * 1024 * 1024;
  std::size_t max_draws = 200000;
  /// Directory holding `<name>.csv` ensembles for built-in datasets.
  std::filesystem::path data_dir = "data";
  /// Optional directory served at "/" (the web UI bundle).
  std::filesystem::path static_dir;
  unsigned workers = 0;
  /// Time source for session expiry; steady_clock::now when empty.
  std::function<std::chrono::steady_clock::time_point()> clock;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// A fitted ensemble kept between requests so that reality judgements can be
/// revised without refitting. Immutable apart from the last-access time.
struct Session {
  Ensemble ensemble;
  RegressionPosterior posterior;
  PosteriorSummary summary;
  SamplerConfig sampler;
  std::chrono::steady_clock::time_point created;
};

/// JSON request handlers behind the HTTP routes. Handlers never throw: every
/// failure becomes a status code and an {"error": {...}} body.
class Service {
 public:
  explicit Service(ServiceOptions options = {});

  Response fit(const nlohmann::json& request);
  Response predict(const nlohmann::json& request);
  Response elicit(const nlohmann::json& request);
  Response datasets() const;
  Response health() const;

  std::size_t session_count() const;
  /// Drops sessions idle for longer than the configured ttl.
  std::size_t purge_expired();

  /// Registers the API routes, CORS handling and the static mount.
  void install(httplib::Server& server);

  const ServiceOptions& options() const { return options_; }

 private:
  struct Entry {
    std::shared_ptr<const Session> session;
    std::shared_ptr<std::atomic<std::chrono::steady_clock::rep>> last_used;
  };

  std::chrono::steady_clock::time_point now() const;
  std::shared_ptr<const Session> lookup(const nlohmann::json& request);

  ServiceOptions options_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Entry> sessions_;
};

/// Serves until the process is stopped. Returns nonzero when the port
/// cannot be bound.
int serve(Service& service, const std::string& host, int port);

}  // namespace ecbayes
