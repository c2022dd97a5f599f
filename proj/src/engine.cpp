#include "gamefeat/engine.hpp"

#include "gamefeat/checksum.hpp"
#include "gamefeat/error.hpp"

namespace gamefeat {

Engine::Engine(LexiconTagger tagger, std::optional<Corpus> corpus,
               std::optional<EmbeddingTable> embeddings,
               std::unique_ptr<ConceptNetClient> conceptnet,
               std::unique_ptr<ExternalBackend> external, unsigned threads,
               std::optional<ScoringIndex> index)
    : tagger_(std::move(tagger)),
      pipeline_(tagger_),
      corpus_(std::move(corpus)),
      embeddings_(std::move(embeddings)),
      conceptnet_(std::move(conceptnet)),
      external_(std::move(external)),
      threads_(threads) {
  if (corpus_ && embeddings_) {
    idf_ = compute_idf(*corpus_);
    if (index)
      recommender_ = std::make_unique<Recommender>(*corpus_, *embeddings_, std::move(*index));
    else
      recommender_ = std::make_unique<Recommender>(*corpus_, *embeddings_);
  }
}

std::unique_ptr<Engine> Engine::load(const EngineConfig& config) {
  auto tagger = LexiconTagger::from_file(config.lexicon);

  std::optional<Corpus> corpus;
  if (config.corpus) corpus = Corpus::load(*config.corpus);
  std::optional<EmbeddingTable> embeddings;
  if (config.embeddings) embeddings = load_embeddings(*config.embeddings, config.dimension);

  std::optional<ScoringIndex> index;
  if (corpus && embeddings && config.index_cache) {
    const auto efp = checksum_file(*config.embeddings);
    index = ScoringIndex::load(*config.index_cache, corpus->fingerprint(), efp);
    if (!index) {
      index = ScoringIndex::build(*corpus, *embeddings);
      index->save(*config.index_cache, corpus->fingerprint(), efp);
    }
  }

  std::unique_ptr<EdgeSource> edges;
  if (config.offline_edges) {
    edges = std::make_unique<FixtureEdgeSource>(FixtureEdgeSource::from_file(*config.offline_edges));
  } else if (config.live_conceptnet) {
    edges = std::make_unique<LiveEdgeSource>(config.conceptnet_url);
  }
  if (edges && config.edge_cache)
    edges = std::make_unique<CachedEdgeSource>(std::move(edges), *config.edge_cache);
  std::unique_ptr<ConceptNetClient> client;
  if (edges) client = std::make_unique<ConceptNetClient>(std::move(edges));

  std::unique_ptr<ExternalBackend> external;
  if (config.external_backend)
    external = std::make_unique<HttpExternalBackend>(*config.external_backend);

  return std::make_unique<Engine>(std::move(tagger), std::move(corpus), std::move(embeddings),
                                  std::move(client), std::move(external), config.threads,
                                  std::move(index));
}

const Corpus& Engine::corpus() const {
  if (!corpus_) throw Unavailable("no corpus loaded");
  return *corpus_;
}

const EmbeddingTable& Engine::embeddings() const {
  if (!embeddings_) throw Unavailable("no embeddings loaded");
  return *embeddings_;
}

const IdfTable& Engine::idf() const {
  if (!idf_) throw Unavailable("recommendation needs both a corpus and embeddings");
  return *idf_;
}

const Recommender& Engine::recommender() const {
  if (!recommender_) throw Unavailable("recommendation needs both a corpus and embeddings");
  return *recommender_;
}

PromptAnalysis Engine::analyze(std::string_view prompt) const {
  return analyze_prompt(prompt, pipeline_, embeddings(), idf());
}

RecommendationContext Engine::recommend(std::string_view prompt, std::size_t k) const {
  const auto analysis = analyze(prompt);
  return recommender().recommend(analysis, k, threads_);
}

std::vector<std::string> Engine::prompt_entities(std::string_view prompt) const {
  return pipeline_.analyze(prompt).entities;
}

std::vector<GeneratedFeature> Engine::generate(GeneratorId generator, std::string_view prompt,
                                               std::size_t n, const SamplerConfig& config,
                                               std::size_t k,
                                               std::vector<std::string>* diagnostics) const {
  switch (generator) {
    case GeneratorId::ConceptNet: {
      if (!conceptnet_) throw Unavailable("semantic-network generator is not configured");
      const auto entities = prompt_entities(prompt);
      if (entities.empty()) throw NoUsableNouns();
      return generate_conceptnet(entities, *conceptnet_, n);
    }
    case GeneratorId::Corpus: {
      config.validate();
      const auto ctx = recommend(prompt, k);
      return sample_features(build_candidate_pool(ctx, corpus()), config, n);
    }
    case GeneratorId::External: {
      if (!external_) throw Unavailable("external backend is not configured");
      config.validate();
      const auto ctx = recommend(prompt, k);
      return generate_external(*external_, make_generator_prompt(ctx), config, n, diagnostics);
    }
  }
  throw Unavailable("unknown generator");
}

}  // namespace gamefeat
