#include "ecbayes/service.hpp"

#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>

#include <httplib.h>

#include "ecbayes/error.hpp"
#include "ecbayes/json_io.hpp"
#include "ecbayes/predictive.hpp"

namespace ecbayes {

using nlohmann::json;

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found:
      return 404;
    case ErrorKind::convergence:
      return 500;
    default:
      return 422;
  }
}

Response error_response(const Error& e) {
  json err{{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (!e.stage().empty()) err["stage"] = e.stage();
  const std::string msg = e.what();
  if (e.kind() == ErrorKind::config && !msg.empty() && msg.front() == '/') {
    err["field"] = msg.substr(0, msg.find(": "));
  }
  return {status_for(e.kind()), {{"error", err}}};
}

template <class Fn>
Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return {500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}}};
  }
}

[[noreturn]] void invalid(const std::string& pointer, const std::string& message) {
  throw Error(ErrorKind::config, pointer + ": " + message);
}

std::string string_field(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_string()) invalid(std::string("/") + key, "expected a string");
  return v.get<std::string>();
}

const CatalogEntry& builtin_entry(const std::string& name) {
  try {
    return find_builtin(name);
  } catch (const Error& e) {
    invalid("/builtin", e.what());
  }
}

Ensemble ensemble_from_request(const json& request, const std::filesystem::path& data_dir) {
  const bool has_csv = request.contains("ensemble_csv");
  const bool has_builtin = request.contains("builtin");
  if (has_csv == has_builtin) invalid("/ensemble_csv", "exactly one of ensemble_csv or builtin is required");
  try {
    if (has_csv) return parse_ensemble_csv(string_field(request, "ensemble_csv"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::parse) invalid("/ensemble_csv", e.what());
    throw;
  }
  const auto name = string_field(request, "builtin");
  builtin_entry(name);
  const auto path = data_dir / (name + ".csv");
  if (!std::filesystem::exists(path)) invalid("/builtin", "external data required: " + path.string() + " not found");
  return load_ensemble_csv(path.string());
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 engine{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream id;
  id << std::hex << std::setfill('0') << std::setw(16) << engine() << std::setw(16) << engine();
  return id.str();
}

void require_object(const json& request) {
  if (!request.is_object()) invalid("/", "expected a JSON object");
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

std::chrono::steady_clock::time_point Service::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

std::size_t Service::session_count() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::size_t Service::purge_expired() {
  const auto cutoff = (now() - options_.session_ttl).time_since_epoch().count();
  std::unique_lock lock(mutex_);
  return std::erase_if(sessions_, [&](const auto& item) { return item.second.last_used->load() < cutoff; });
}

std::shared_ptr<const Session> Service::lookup(const json& request) {
  if (!request.contains("session_id")) invalid("/session_id", "required field is missing");
  const auto id = string_field(request, "session_id");
  const auto t = now();
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.last_used->load() < (t - options_.session_ttl).time_since_epoch().count()) {
    throw Error(ErrorKind::not_found, "unknown or expired session '" + id + "'");
  }
  it->second.last_used->store(t.time_since_epoch().count());
  return it->second.session;
}

Response Service::fit(const json& request) {
  return guarded([&]() -> Response {
    require_object(request);
    purge_expired();
    auto e = ensemble_from_request(request, options_.data_dir);
    const auto prior = request.contains("model_prior") ? parse_model_prior(request.at("model_prior"), "/model_prior")
                                                       : ModelPrior::reference();
    const auto sampler = request.contains("sampler") ? parse_sampler(request.at("sampler"), "/sampler") : SamplerConfig{};
    if (sampler.draws > options_.max_draws) {
      invalid("/sampler/draws", "must be <= " + std::to_string(options_.max_draws));
    }
    AnalysisConfig cfg;
    cfg.sampler = sampler;
    auto opts = cfg.sampler_options(options_.workers);
    if (request.contains("strict")) {
      if (!request.at("strict").is_boolean()) invalid("/strict", "expected a boolean");
      opts.strict = request.at("strict").get<bool>();
    }

    auto rng = fit_stream(sampler.seed);
    auto post = fit_posterior(e, prior, opts, rng);
    const auto summary = summarize(post);
    json body = fit_payload(post, summary, e);

    auto session = std::make_shared<const Session>(Session{std::move(e), std::move(post), summary, sampler, now()});
    const auto id = new_session_id();
    {
      std::unique_lock lock(mutex_);
      sessions_[id] = {session, std::make_shared<std::atomic<std::chrono::steady_clock::rep>>(
                                    session->created.time_since_epoch().count())};
    }
    body["session_id"] = id;
    body["seed"] = sampler.seed;
    return {200, body};
  });
}

Response Service::predict(const json& request) {
  return guarded([&]() -> Response {
    require_object(request);
    const auto session = lookup(request);

    AnalysisConfig cfg;
    cfg.model_prior = session->posterior.prior;
    cfg.sampler = session->sampler;
    if (request.contains("builtin")) {
      const auto& entry = builtin_entry(string_field(request, "builtin"));
      cfg.observation = entry.observation;
      cfg.predictor_prior = entry.predictor_prior;
    } else if (request.contains("observation")) {
      cfg.observation = parse_observation(request.at("observation"), "/observation");
    } else {
      invalid("/observation", "required field is missing");
    }
    if (request.contains("predictor_prior")) {
      cfg.predictor_prior = parse_predictor_prior(request.at("predictor_prior"), "/predictor_prior");
    }
    if (request.contains("reality")) cfg.reality = parse_reality_spec(request.at("reality"), "/reality");
    if (request.contains("levels")) cfg.levels = parse_levels(request.at("levels"), "/levels");
    if (request.contains("interval")) cfg.interval_kind = parse_interval_kind(request.at("interval"), "/interval");
    if (request.contains("seed")) {
      const auto& seed = request.at("seed");
      if (!seed.is_number_unsigned()) invalid("/seed", "expected a non-negative integer");
      cfg.sampler.seed = seed.get<std::uint64_t>();
    }

    const auto result = predict_from_posterior(cfg, session->posterior, session->summary, options_.workers);
    json body = to_json(result);
    body["session_id"] = request.at("session_id");
    return {200, body};
  });
}

Response Service::elicit(const json& request) {
  return guarded([&]() -> Response {
    require_object(request);
    const auto session = lookup(request);
    json spec = request;
    spec.erase("session_id");
    spec["kind"] = "guided";
    const auto reality = parse_reality_spec(spec, "");
    const auto prior = build_reality_prior(session->summary, reality);
    json body = reality_json(prior);
    body["alpha"] = reality.guided.confidence.alpha;
    body["confidence"] = std::string(reality.guided.confidence.name());
    body["session_id"] = request.at("session_id");
    return {200, body};
  });
}

Response Service::datasets() const {
  json list = json::array();
  for (const auto& entry : builtin_catalog()) {
    json item = to_json(entry);
    item["ensemble_available"] = std::filesystem::exists(options_.data_dir / (entry.name + ".csv"));
    list.push_back(item);
  }
  return {200, {{"datasets", list}}};
}

Response Service::health() const { return {200, {{"status", "ok"}}}; }

void Service::install(httplib::Server& server) {
  server.set_payload_max_length(options_.max_payload_bytes);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto post = [&, reply](const char* path, Response (Service::*handler)(const json&)) {
    server.Post(path, [this, reply, handler](const httplib::Request& req, httplib::Response& res) {
      if (req.body.size() > options_.max_payload_bytes) {
        reply(res, {413, {{"error", {{"kind", "payload"}, {"message", "request body exceeds the size limit"}}}}});
        return;
      }
      json doc;
      try {
        doc = json::parse(req.body);
      } catch (const json::parse_error& e) {
        reply(res, {400, {{"error", {{"kind", "parse"}, {"message", e.what()}}}}});
        return;
      }
      reply(res, (this->*handler)(doc));
    });
  };
  post("/api/fit", &Service::fit);
  post("/api/predict", &Service::predict);
  post("/api/elicit", &Service::elicit);
  server.Get("/api/datasets", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, datasets()); });
  server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  if (!options_.static_dir.empty()) server.set_mount_point("/", options_.static_dir.string());
}

int serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.install(server);
  if (!server.listen(host, port)) return 1;
  return 0;
}

}  // namespace ecbayes
