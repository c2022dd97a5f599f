#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gamefeat/corpus.hpp"
#include "gamefeat/embedding.hpp"
#include "gamefeat/textproc.hpp"

namespace gamefeat {

/// Smoothed inverse document frequency over entity-list membership:
///   idf(w) = ln((1 + N) / (1 + df(w))) + 1
/// Unseen words have df = 0, so every weight is >= 1 and positive.
class IdfTable {
 public:
  IdfTable(std::size_t documents, std::unordered_map<std::string, std::size_t> df);

  double idf(std::string_view word) const;
  std::size_t document_frequency(std::string_view word) const;
  std::size_t documents() const { return documents_; }
  const std::unordered_map<std::string, std::size_t>& frequencies() const { return df_; }

 private:
  std::size_t documents_;
  std::unordered_map<std::string, std::size_t> df_;
};

/// Throws Error on an empty corpus.
IdfTable compute_idf(const Corpus& corpus);

struct WeightedNoun {
  std::string noun;
  std::size_t tf = 0;
  double idf = 0;
  double weight = 0;  // tf * idf
};

struct PromptAnalysis {
  std::string raw;
  std::vector<WeightedNoun> nouns;   // embeddable, first-occurrence order
  std::vector<std::string> skipped;  // nouns missing from the embedding table

  bool empty() const { return nouns.empty(); }
};

/// Never throws for content; an analysis with no embeddable nouns is returned
/// as empty() and callers decide how to surface it.
PromptAnalysis analyze_prompt(std::string_view text, const TextPipeline& pipeline,
                              const EmbeddingTable& embeddings, const IdfTable& idf);

struct Contribution {
  std::string prompt_noun;
  std::string best_entity;  // empty when the game has no embeddable entity
  double max_similarity = 0;
  double weighted_term = 0;
};

struct GameScore {
  double score = 0;
  std::vector<Contribution> contributions;
};

/// Reference scorer for one game: per prompt noun, the best cosine over the
/// game's embeddable entities (0 if there are none), weighted and summed.
GameScore score_game(const PromptAnalysis& analysis, std::span<const std::string> game_entities,
                     const EmbeddingTable& embeddings);

struct Recommendation {
  std::string game_id;
  double score = 0;
  std::vector<Contribution> contributions;
};

struct RecommendationContext {
  PromptAnalysis prompt;
  std::vector<Recommendation> top_games;  // score desc, then game_id asc
  std::vector<std::string> pooled_tags;
  std::vector<std::string> pooled_entities;
};

/// Pre-looked-up entity vectors for a corpus: unit-normalized rows for every
/// distinct embeddable entity word, and per-game lists of row ids in entity
/// order (CSR layout).
class ScoringIndex {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ScoringIndex() = default;

  static ScoringIndex build(const Corpus& corpus, const EmbeddingTable& embeddings);

  /// Binary cache keyed by both input fingerprints.
  void save(const std::filesystem::path& path, std::uint64_t corpus_fingerprint,
            std::uint64_t embeddings_fingerprint) const;
  /// nullopt when the file is absent, unreadable or keyed to other inputs.
  static std::optional<ScoringIndex> load(const std::filesystem::path& path,
                                          std::uint64_t corpus_fingerprint,
                                          std::uint64_t embeddings_fingerprint);

  std::size_t games() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t vocabulary() const { return words_.size(); }
  const Matrix& units() const { return units_; }
  const std::string& word(std::size_t row) const { return words_[row]; }
  std::span<const std::uint32_t> entities_of(std::size_t game) const {
    return {entity_rows_.data() + offsets_[game], offsets_[game + 1] - offsets_[game]};
  }

 private:
  Matrix units_;
  std::vector<std::string> words_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> entity_rows_;
};

/// Exhaustive scorer over a whole corpus. The similarity matrix between the
/// prompt's noun vectors and every distinct corpus entity is one dense
/// product; each game then takes row maxima over its own entities. Per-game
/// sums run in fixed noun order, so results do not depend on `threads`.
class Recommender {
 public:
  Recommender(const Corpus& corpus, const EmbeddingTable& embeddings);
  Recommender(const Corpus& corpus, const EmbeddingTable& embeddings, ScoringIndex index);

  /// One score per corpus game, corpus order.
  std::vector<double> score_all(const PromptAnalysis& analysis, unsigned threads = 1) const;

  /// Throws NoUsableNouns on an empty analysis, std::invalid_argument on k == 0.
  RecommendationContext recommend(const PromptAnalysis& analysis, std::size_t k,
                                  unsigned threads = 1) const;

  const Corpus& corpus() const { return *corpus_; }
  const ScoringIndex& index() const { return index_; }

 private:
  ScoringIndex::Matrix similarity(const PromptAnalysis& analysis) const;
  GameScore explain(const PromptAnalysis& analysis, const ScoringIndex::Matrix& sims,
                    std::size_t game) const;

  const Corpus* corpus_;
  const EmbeddingTable* embeddings_;
  ScoringIndex index_;
};

/// Public JSON projections (service bodies and machine-readable CLI output).
nlohmann::json to_json(const PromptAnalysis& analysis);
nlohmann::json to_json(const Recommendation& recommendation);
nlohmann::json to_json(const RecommendationContext& context);

/// Convenience: builds a throwaway index and recommends.
RecommendationContext recommend(const PromptAnalysis& analysis, const Corpus& corpus,
                                const EmbeddingTable& embeddings, std::size_t k);

}  // namespace gamefeat
