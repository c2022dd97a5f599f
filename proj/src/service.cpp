#include "gamefeat/service.hpp"

#include <httplib.h>

#include "gamefeat/error.hpp"

namespace gamefeat {

using nlohmann::json;

StudyBundle build_study_bundle(const Engine& engine, const std::string& prompt,
                               std::vector<std::string> human_features,
                               const std::array<std::string, 2>& generators, std::uint64_t seed,
                               std::size_t k) {
  std::array<SourcedSet, 3> sets;
  sets[0] = SourcedSet{"human", std::move(human_features)};
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const auto id = parse_generator_id(generators[i]);
    if (!id) throw std::invalid_argument("unknown generator '" + generators[i] + "'");
    SamplerConfig config;
    config.seed = seed;
    std::vector<GeneratedFeature> features;
    try {
      features = engine.generate(*id, prompt, kStudySetSize, config, k);
    } catch (const NoCandidates&) {
    }
    if (features.size() < kStudySetSize) throw TooFewCandidates(generators[i], features.size());
    std::vector<std::string> texts;
    for (std::size_t j = 0; j < kStudySetSize; ++j) texts.push_back(features[j].text);
    sets[i + 1] = SourcedSet{generators[i], std::move(texts)};
  }
  return make_study_bundle(prompt, std::move(sets), seed);
}

ApiResponse error_response(int status, std::string code, std::string message, json detail) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}, {"detail", std::move(detail)}}};
}

namespace {

// Request-shape problems, answered with 400.
class BadRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string required_string(const json& req, const char* key) {
  if (!req.is_object() || !req.contains(key) || !req[key].is_string())
    throw BadRequest(std::string("'") + key + "' must be a string");
  return req[key].get<std::string>();
}

std::size_t positive_count(const json& req, const char* key, std::size_t fallback) {
  if (!req.contains(key) || req[key].is_null()) return fallback;
  if (!req[key].is_number_integer() || req[key].get<long long>() < 1)
    throw BadRequest(std::string("'") + key + "' must be an integer >= 1");
  return req[key].get<std::size_t>();
}

SamplerConfig sampler_config(const json& req) {
  SamplerConfig c;
  if (req.contains("seed")) {
    if (!req["seed"].is_number_integer()) throw BadRequest("'seed' must be an integer");
    c.seed = req["seed"].get<std::uint64_t>();
  }
  if (req.contains("config")) {
    const auto& cfg = req["config"];
    if (!cfg.is_object()) throw BadRequest("'config' must be an object");
    try {
      c.temperature = cfg.value("temperature", c.temperature);
      c.top_k = cfg.value("top_k", c.top_k);
      c.top_p = cfg.value("top_p", c.top_p);
      c.repetition_penalty = cfg.value("repetition_penalty", c.repetition_penalty);
      c.greedy = cfg.value("greedy", c.greedy);
    } catch (const json::exception& e) {
      throw BadRequest(std::string("bad sampler config: ") + e.what());
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw BadRequest(e.what());
  }
  return c;
}

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const NoUsableNouns& e) {
    return error_response(400, "no_usable_nouns", e.what());
  } catch (const NoCandidates& e) {
    return error_response(404, "no_candidates", e.what());
  } catch (const NotFound& e) {
    return error_response(404, "not_found", e.what());
  } catch (const Unavailable& e) {
    return error_response(503, "unavailable", e.what());
  } catch (const RetryableError& e) {
    return error_response(502, "backend_unreachable", e.what());
  } catch (const ProtocolError& e) {
    return error_response(502, "backend_protocol", e.what());
  } catch (const std::invalid_argument& e) {
    return error_response(400, "invalid_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

}  // namespace

Service::Service(std::shared_ptr<const Engine> engine, const std::filesystem::path& data_dir,
                 std::size_t default_k)
    : engine_(std::move(engine)),
      sessions_(data_dir / "sessions"),
      studies_(data_dir / "bundles"),
      default_k_(default_k) {}

ApiResponse Service::recommend(const json& req) const {
  return guarded([&] {
    const auto prompt = required_string(req, "prompt");
    const auto k = positive_count(req, "k", default_k_);
    if (!engine_ || !engine_->can_recommend())
      return error_response(503, "engine_not_loaded", "corpus and embeddings are not loaded");
    const auto ctx = engine_->recommend(prompt, k);
    return ApiResponse{200, to_json(ctx)};
  });
}

ApiResponse Service::generate(const json& req) const {
  return guarded([&] {
    const auto prompt = required_string(req, "prompt");
    const auto name = required_string(req, "generator");
    const auto generator = parse_generator_id(name);
    if (!generator)
      return error_response(400, "unknown_generator", "unknown generator '" + name + "'",
                            {{"allowed", {"conceptnet", "corpus", "external"}}});
    const auto n = positive_count(req, "n", 5);
    const auto k = positive_count(req, "k", default_k_);
    const auto config = sampler_config(req);
    if (!engine_) return error_response(503, "engine_not_loaded", "engine is not loaded");
    std::vector<std::string> diagnostics;
    const auto features = engine_->generate(*generator, prompt, n, config, k, &diagnostics);
    json out = json::array();
    for (const auto& f : features) out.push_back(to_json(f));
    return ApiResponse{200, {{"generator", name}, {"features", out}, {"diagnostics", diagnostics}}};
  });
}

ApiResponse Service::create_session(const json& req) {
  return guarded([&] {
    const auto prompt = required_string(req, "prompt");
    const auto s = sessions_.create(prompt);
    return ApiResponse{201, s.to_json()};
  });
}

ApiResponse Service::decide(const std::string& session_id, const json& req) {
  return guarded([&] {
    if (!sessions_.get(session_id))
      return error_response(404, "not_found", "unknown session '" + session_id + "'");
    if (!req.is_object() || !req.contains("verdict") || !req["verdict"].is_string())
      return error_response(409, "malformed_verdict", "'verdict' must be 'accepted' or 'rejected'");
    const auto verdict = parse_verdict(req["verdict"].get<std::string>());
    if (!verdict)
      return error_response(409, "malformed_verdict", "'verdict' must be 'accepted' or 'rejected'");
    json feature = req.value("feature", json());
    if (feature.is_string()) feature = json{{"text", feature}};
    std::string note;
    if (req.contains("note") && req["note"].is_string()) note = req["note"].get<std::string>();
    try {
      const auto s = sessions_.decide(session_id, feature, *verdict, note);
      return ApiResponse{200, {{"id", s.id},
                               {"decisions", s.decisions.size()},
                               {"tally", to_json(s.tally())}}};
    } catch (const std::invalid_argument& e) {
      return error_response(409, "malformed_feature", e.what());
    }
  });
}

ApiResponse Service::get_session(const std::string& session_id) const {
  const auto s = sessions_.get(session_id);
  if (!s) return error_response(404, "not_found", "unknown session '" + session_id + "'");
  return {200, s->to_json()};
}

ApiResponse Service::create_bundle(const json& req) {
  return guarded([&] {
    const auto prompt = required_string(req, "prompt");
    if (!req.contains("human_features") || !req["human_features"].is_array() ||
        req["human_features"].size() != kStudySetSize)
      throw BadRequest("'human_features' must hold exactly 5 strings");
    std::vector<std::string> human;
    for (const auto& f : req["human_features"]) {
      if (!f.is_string() || trim(f.get<std::string>()).empty())
        throw BadRequest("'human_features' must hold exactly 5 nonempty strings");
      human.push_back(trim(f.get<std::string>()));
    }
    if (!req.contains("generators") || !req["generators"].is_array() ||
        req["generators"].size() != 2)
      throw BadRequest("'generators' must name exactly 2 generators");
    if (!req.contains("seed") || !req["seed"].is_number_integer())
      throw BadRequest("'seed' must be an integer");
    const auto seed = req["seed"].get<std::uint64_t>();
    const auto k = positive_count(req, "k", default_k_);
    if (!engine_) return error_response(503, "engine_not_loaded", "engine is not loaded");

    std::array<std::string, 2> generators;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& g = req["generators"][i];
      if (!g.is_string() || !parse_generator_id(g.get<std::string>()))
        return error_response(400, "unknown_generator", "unknown generator " + g.dump());
      generators[i] = g.get<std::string>();
    }
    StudyBundle bundle;
    try {
      bundle = build_study_bundle(*engine_, prompt, std::move(human), generators, seed, k);
    } catch (const TooFewCandidates& e) {
      return error_response(422, "too_few_candidates", e.what(),
                            {{"generator", e.generator()}, {"candidates", e.produced()}});
    }
    studies_.put(bundle);
    return ApiResponse{201, bundle.public_json()};
  });
}

ApiResponse Service::get_bundle(const std::string& bundle_id) const {
  const auto b = studies_.get(bundle_id);
  if (!b) return error_response(404, "not_found", "unknown bundle '" + bundle_id + "'");
  return {200, b->public_json()};
}

ApiResponse Service::unblind(const std::string& bundle_id) const {
  const auto b = studies_.get(bundle_id);
  if (!b) return error_response(404, "not_found", "unknown bundle '" + bundle_id + "'");
  return {200, {{"id", b->id}, {"label_map", b->label_map_json()}}};
}

void Service::mount(httplib::Server& server,
                    const std::optional<std::filesystem::path>& static_dir) {
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto with_body = [send](auto handler) {
    return [send, handler](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = req.body.empty() ? json::object() : json::parse(req.body);
      } catch (const json::parse_error& e) {
        send(res, error_response(400, "invalid_json", e.what()));
        return;
      }
      send(res, handler(req, body));
    };
  };

  server.Post("/api/recommend", with_body([this](const httplib::Request&, const json& b) {
                return recommend(b);
              }));
  server.Post("/api/generate", with_body([this](const httplib::Request&, const json& b) {
                return generate(b);
              }));
  server.Post("/api/sessions", with_body([this](const httplib::Request&, const json& b) {
                return create_session(b);
              }));
  server.Post(R"(/api/sessions/([0-9a-f]+)/decide)",
              with_body([this](const httplib::Request& req, const json& b) {
                return decide(req.matches[1].str(), b);
              }));
  server.Get(R"(/api/sessions/([0-9a-f]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, get_session(req.matches[1].str()));
             });
  server.Post("/api/study/bundle", with_body([this](const httplib::Request&, const json& b) {
                return create_bundle(b);
              }));
  server.Get(R"(/api/study/bundle/([0-9a-f]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, get_bundle(req.matches[1].str()));
             });
  server.Get(R"(/api/study/bundle/([0-9a-f]+)/unblind)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, unblind(req.matches[1].str()));
             });
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace gamefeat
