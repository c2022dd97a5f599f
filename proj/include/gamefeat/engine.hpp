#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gamefeat/conceptnet.hpp"
#include "gamefeat/corpus.hpp"
#include "gamefeat/corpus_generator.hpp"
#include "gamefeat/embedding.hpp"
#include "gamefeat/recommender.hpp"
#include "gamefeat/textproc.hpp"

namespace gamefeat {

struct EngineConfig {
  std::filesystem::path lexicon = GAMEFEAT_DEFAULT_LEXICON;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> embeddings;
  Eigen::Index dimension = 50;
  std::optional<std::filesystem::path> index_cache;
  std::optional<std::filesystem::path> offline_edges;
  std::optional<std::filesystem::path> edge_cache;
  bool live_conceptnet = false;
  std::string conceptnet_url = "http://api.conceptnet.io";
  std::optional<std::string> external_backend;
  unsigned threads = 1;
};

/// Everything loaded once at startup: tagger, corpus, embeddings, idf table,
/// scoring index and the configured generator backends. Read-only afterwards
/// apart from the internally synchronized semantic-network client. Not
/// movable; components hold references into each other.
class Engine {
 public:
  Engine(LexiconTagger tagger, std::optional<Corpus> corpus,
         std::optional<EmbeddingTable> embeddings,
         std::unique_ptr<ConceptNetClient> conceptnet = nullptr,
         std::unique_ptr<ExternalBackend> external = nullptr, unsigned threads = 1,
         std::optional<ScoringIndex> index = std::nullopt);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  static std::unique_ptr<Engine> load(const EngineConfig& config);

  bool can_recommend() const { return recommender_ != nullptr; }

  const TextPipeline& pipeline() const { return pipeline_; }
  const Corpus& corpus() const;
  const EmbeddingTable& embeddings() const;
  const IdfTable& idf() const;
  const Recommender& recommender() const;

  /// Throws Unavailable when no corpus/embeddings were loaded.
  PromptAnalysis analyze(std::string_view prompt) const;
  /// Throws NoUsableNouns, Unavailable.
  RecommendationContext recommend(std::string_view prompt, std::size_t k) const;

  /// All NOUN tokens of the prompt, embeddable or not.
  std::vector<std::string> prompt_entities(std::string_view prompt) const;

  /// recommend -> generator. The semantic-network generator works from the
  /// prompt's own nouns and needs no corpus.
  std::vector<GeneratedFeature> generate(GeneratorId generator, std::string_view prompt,
                                         std::size_t n, const SamplerConfig& config,
                                         std::size_t k,
                                         std::vector<std::string>* diagnostics = nullptr) const;

 private:
  LexiconTagger tagger_;
  TextPipeline pipeline_;
  std::optional<Corpus> corpus_;
  std::optional<EmbeddingTable> embeddings_;
  std::optional<IdfTable> idf_;
  std::unique_ptr<Recommender> recommender_;
  std::unique_ptr<ConceptNetClient> conceptnet_;
  std::unique_ptr<ExternalBackend> external_;
  unsigned threads_;
};

}  // namespace gamefeat
