#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamefeat/feature.hpp"

namespace gamefeat {

/// Anything that can answer "edges of relation R touching concept X".
/// Implementations may return edges in any direction and order; the client
/// filters and sorts.
class EdgeSource {
 public:
  virtual ~EdgeSource() = default;
  virtual std::vector<SemanticEdge> query(std::string_view noun, Relation relation) = 0;
};

/// Offline mode: `start<TAB>relation<TAB>end<TAB>weight` lines, `#` comments.
class FixtureEdgeSource final : public EdgeSource {
 public:
  explicit FixtureEdgeSource(std::vector<SemanticEdge> edges) : edges_(std::move(edges)) {}

  /// Throws FormatError naming the line for a bad relation or weight <= 0.
  static FixtureEdgeSource from_stream(std::istream& in);
  static FixtureEdgeSource from_file(const std::filesystem::path& path);

  std::vector<SemanticEdge> query(std::string_view noun, Relation relation) override;
  std::size_t size() const { return edges_.size(); }

 private:
  std::vector<SemanticEdge> edges_;
};

struct HttpPolicy {
  std::chrono::milliseconds politeness_delay{1000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};  // doubles per retry
  std::chrono::milliseconds timeout{10000};
};

/// Live mode against the public API (plain HTTP). At most one request in
/// flight; consecutive requests are spaced by the politeness delay.
class LiveEdgeSource final : public EdgeSource {
 public:
  explicit LiveEdgeSource(std::string base_url = "http://api.conceptnet.io",
                          HttpPolicy policy = {});

  /// Throws RetryableError once the retry budget is spent, ProtocolError on
  /// an unexpected payload. An unknown concept yields no edges.
  std::vector<SemanticEdge> query(std::string_view noun, Relation relation) override;

  /// Parses the API's edge-list payload, keeping edges whose start node is
  /// `/c/en/<noun>` (any sense suffix) and whose relation matches.
  static std::vector<SemanticEdge> parse_edges(const nlohmann::json& body, std::string_view noun,
                                               Relation relation);

  std::size_t requests_sent() const;

 private:
  std::string base_url_;
  HttpPolicy policy_;
  mutable std::mutex mutex_;
  std::chrono::steady_clock::time_point last_request_{};
  bool any_request_ = false;
  std::size_t requests_ = 0;
};

/// Wraps another source with an append-only cache file, one JSON line per
/// (noun, relation) fetch. Staleness is ignored.
class CachedEdgeSource final : public EdgeSource {
 public:
  CachedEdgeSource(std::unique_ptr<EdgeSource> upstream, std::filesystem::path cache_file);

  std::vector<SemanticEdge> query(std::string_view noun, Relation relation) override;
  std::size_t cached_entries() const;

 private:
  std::unique_ptr<EdgeSource> upstream_;
  std::filesystem::path cache_file_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, Relation>, std::vector<SemanticEdge>> cache_;
};

/// Front door for the generator: fetches both relations for a noun, keeps
/// only edges that start at the noun, orders them by descending weight and
/// memoizes per (noun, relation). Thread-safe.
class ConceptNetClient {
 public:
  explicit ConceptNetClient(std::unique_ptr<EdgeSource> source);

  std::vector<SemanticEdge> fetch_edges(std::string_view noun);

 private:
  std::unique_ptr<EdgeSource> source_;
  std::mutex mutex_;
  std::map<std::pair<std::string, Relation>, std::vector<SemanticEdge>> memo_;
};

/// Emits the end phrases of the entities' CapableOf/UsedFor edges verbatim,
/// deduplicated case-insensitively (highest weight kept), scored by edge
/// weight, top `n` by score then text. Tags play no part.
/// Throws NoCandidates when no entity has an edge.
std::vector<GeneratedFeature> generate_conceptnet(std::span<const std::string> entities,
                                                  ConceptNetClient& client, std::size_t n);

}  // namespace gamefeat
