#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace gamefeat {

enum class Verdict { Accepted, Rejected };

std::string_view to_string(Verdict v);
/// Accepts "accepted"/"accept" and "rejected"/"reject".
std::optional<Verdict> parse_verdict(std::string_view text);

struct Decision {
  nlohmann::json feature;  // GeneratedFeature projection; "text" is required
  Verdict verdict = Verdict::Accepted;
  std::string decided_at;
  std::string note;  // optional free-text suggestion
};

struct Tally {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, Verdict> live;  // feature text -> latest verdict
};

/// A curation session. The decision log only grows; a later verdict on the
/// same feature text supersedes the earlier one in the tally.
struct Session {
  std::string id;
  std::string prompt;
  std::string created_at;
  std::vector<Decision> decisions;

  Tally tally() const;
  nlohmann::json to_json() const;
};

nlohmann::json to_json(const Tally& tally);

/// One append-only NDJSON event log per session under `dir`. Every event is
/// fsync'd before the call returns; startup replays the logs. A torn final
/// line (crash mid-write, never acknowledged) is ignored.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  Session create(std::string prompt);
  std::optional<Session> get(std::string_view id) const;
  /// Throws NotFound for an unknown id, std::invalid_argument for a feature
  /// without text.
  Session decide(std::string_view id, nlohmann::json feature, Verdict verdict,
                 std::string note = {});

  std::size_t size() const;

 private:
  void append(const std::string& id, const nlohmann::json& event);
  void replay(const std::filesystem::path& log);

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Session> sessions_;
};

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

}  // namespace gamefeat
