#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamefeat/conceptnet.hpp"
#include "gamefeat/corpus.hpp"
#include "gamefeat/feature.hpp"
#include "gamefeat/recommender.hpp"

namespace gamefeat {

/// Sampling controls. The defaults are fixed; tests and study bundles
/// depend on them.
struct SamplerConfig {
  double temperature = 0.95;
  std::size_t top_k = 100;
  double top_p = 0.8;
  double repetition_penalty = 0.95;
  std::uint64_t seed = 0;
  bool greedy = false;  // temperature -> 0+ limit: always the current argmax

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// What conditions a generator: pooled tags and entities of the recommended games.
struct GeneratorPrompt {
  std::vector<std::string> tags;
  std::vector<std::string> entities;
};

GeneratorPrompt make_generator_prompt(const RecommendationContext& context);

struct Candidate {
  std::string text;  // rendered "verb [article] noun"
  std::string verb;
  std::optional<std::string> article;
  std::string noun;
  double weight = 0;
  CorpusOrigin origin;
};

/// Candidates keyed by rendered text, kept in text order.
class CandidatePool {
 public:
  /// Adds `weight` to the candidate with this text, creating it if needed.
  Candidate& add(const FeaturePhrase& parts, double weight);

  std::span<const Candidate> candidates() const { return candidates_; }
  const Candidate* find(std::string_view text) const;
  std::size_t size() const { return candidates_.size(); }
  bool empty() const { return candidates_.empty(); }

  /// Sorts by text. Called by build_candidate_pool; add() after it unsorts.
  void finalize();

 private:
  std::vector<Candidate> candidates_;
  std::unordered_map<std::string, std::size_t> by_text_;
};

/// Retrieval: every feature phrase of every recommended game, weighted by
/// that game's score. Recombination: a verb from one game with an
/// (article, noun) from a different game sharing at least one tag, weighted
/// by half the geometric mean of the two scores. Negative scores count as 0.
/// Duplicate texts sum their weights. Throws NoCandidates on an empty pool.
CandidatePool build_candidate_pool(const RecommendationContext& context, const Corpus& corpus);

/// Iterative weighted draw without replacement. Each step: w -> w^(1/T),
/// keep the top_k, keep the smallest prefix holding top_p of the mass, draw
/// one, then scale the remaining candidates sharing its noun by
/// repetition_penalty. Returns min(n, |pool|) features scored by their pool
/// weight. Same pool + config (incl. seed) gives the same sequence.
std::vector<GeneratedFeature> sample_features(const CandidatePool& pool,
                                              const SamplerConfig& config, std::size_t n);

// ---------------------------------------------------------------------------
// External language-model backend

struct ExternalBackendRequest {
  GeneratorPrompt prompt;
  SamplerConfig config;
  std::size_t n = 5;

  /// {tags, entities, n, temperature, top_k, top_p, repetition_penalty}
  nlohmann::json to_json() const;
};

struct ExternalBackendResponse {
  std::vector<std::string> features;

  /// Expects {features: [string...]}; throws ProtocolError otherwise.
  static ExternalBackendResponse from_json(const nlohmann::json& body);
};

class ExternalBackend {
 public:
  virtual ~ExternalBackend() = default;
  virtual ExternalBackendResponse complete(const ExternalBackendRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// POSTs the request as JSON to `url` (http://host:port/path). Connection
/// failures, timeouts and 5xx are retried with exponential backoff, then
/// surface as RetryableError.
class HttpExternalBackend final : public ExternalBackend {
 public:
  explicit HttpExternalBackend(std::string url, HttpPolicy policy = default_policy());

  ExternalBackendResponse complete(const ExternalBackendRequest& request) override;
  std::string id() const override { return url_; }

  static HttpPolicy default_policy();

 private:
  std::string url_;
  HttpPolicy policy_;
};

/// Longest feature line accepted from an external backend, in tokens.
inline constexpr std::size_t kMaxExternalFeatureTokens = 12;

/// Each nonempty response line becomes a feature in response order, up to n.
/// Lines over the token limit or with control characters are dropped and
/// reported through `diagnostics`. Throws NoCandidates if nothing survives.
std::vector<GeneratedFeature> generate_external(ExternalBackend& backend,
                                                const GeneratorPrompt& prompt,
                                                const SamplerConfig& config, std::size_t n,
                                                std::vector<std::string>* diagnostics = nullptr);

}  // namespace gamefeat
