#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gamefeat/engine.hpp"
#include "gamefeat/error.hpp"
#include "gamefeat/session_store.hpp"
#include "gamefeat/study.hpp"

namespace httplib {
class Server;
}

namespace gamefeat {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// {code, message, detail} envelope used by every error response.
ApiResponse error_response(int status, std::string code, std::string message,
                           nlohmann::json detail = nlohmann::json::object());

/// A generator produced fewer candidates than a study set needs.
class TooFewCandidates : public Error {
 public:
  TooFewCandidates(std::string generator, std::size_t produced)
      : Error("generator '" + generator + "' yielded " + std::to_string(produced) +
              " candidates, a study set needs 5"),
        generator_(std::move(generator)),
        produced_(produced) {}

  const std::string& generator() const { return generator_; }
  std::size_t produced() const { return produced_; }

 private:
  std::string generator_;
  std::size_t produced_;
};

/// Runs both generators for five features each and labels the three sets
/// with the seeded permutation. Throws TooFewCandidates, std::invalid_argument
/// (bad human set or generator name) or the engine's errors.
StudyBundle build_study_bundle(const Engine& engine, const std::string& prompt,
                               std::vector<std::string> human_features,
                               const std::array<std::string, 2>& generators, std::uint64_t seed,
                               std::size_t k);

/// JSON API over the engine. Handlers are plain functions of the request
/// body so they can be driven without a socket; mount() wires them to
/// routes:
///
///   POST /api/recommend                 {prompt, k?}
///   POST /api/generate                  {prompt, generator, n?, seed?, k?, config?}
///   POST /api/sessions                  {prompt}
///   POST /api/sessions/{id}/decide      {feature, verdict, note?}
///   GET  /api/sessions/{id}
///   POST /api/study/bundle              {prompt, human_features[5], generators[2], seed}
///   GET  /api/study/bundle/{id}
///   GET  /api/study/bundle/{id}/unblind
///
/// Sessions and bundles live under `data_dir`. A null engine answers 503 on
/// engine-backed routes.
class Service {
 public:
  Service(std::shared_ptr<const Engine> engine, const std::filesystem::path& data_dir,
          std::size_t default_k = 10);

  ApiResponse recommend(const nlohmann::json& request) const;
  ApiResponse generate(const nlohmann::json& request) const;
  ApiResponse create_session(const nlohmann::json& request);
  ApiResponse decide(const std::string& session_id, const nlohmann::json& request);
  ApiResponse get_session(const std::string& session_id) const;
  ApiResponse create_bundle(const nlohmann::json& request);
  ApiResponse get_bundle(const std::string& bundle_id) const;
  ApiResponse unblind(const std::string& bundle_id) const;

  /// Registers the routes; serves `static_dir` under "/" when given.
  void mount(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir = {});

  SessionStore& sessions() { return sessions_; }

 private:
  std::shared_ptr<const Engine> engine_;
  SessionStore sessions_;
  StudyStore studies_;
  std::size_t default_k_;
};

}  // namespace gamefeat
