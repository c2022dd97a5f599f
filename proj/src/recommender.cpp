#include "gamefeat/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "gamefeat/error.hpp"

namespace gamefeat {

IdfTable::IdfTable(std::size_t documents, std::unordered_map<std::string, std::size_t> df)
    : documents_(documents), df_(std::move(df)) {}

std::size_t IdfTable::document_frequency(std::string_view word) const {
  const auto it = df_.find(std::string(word));
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(std::string_view word) const {
  const auto n = static_cast<double>(documents_);
  const auto df = static_cast<double>(document_frequency(word));
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

IdfTable compute_idf(const Corpus& corpus) {
  if (corpus.empty()) throw Error("cannot compute idf over an empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& game : corpus.records()) {
    std::unordered_set<std::string_view> seen;
    for (const auto& e : game.entities) {
      if (seen.insert(e).second) ++df[e];
    }
  }
  return IdfTable(corpus.size(), std::move(df));
}

PromptAnalysis analyze_prompt(std::string_view text, const TextPipeline& pipeline,
                              const EmbeddingTable& embeddings, const IdfTable& idf) {
  PromptAnalysis out;
  out.raw = std::string(text);
  const auto analysis = pipeline.analyze(text);

  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> tf;
  for (const auto& t : analysis.tokens) {
    if (t.tag != PosTag::Noun) continue;
    if (tf[t.norm]++ == 0) order.push_back(t.norm);
  }
  for (const auto& noun : order) {
    if (!embeddings.index_of(noun)) {
      out.skipped.push_back(noun);
      continue;
    }
    WeightedNoun w;
    w.noun = noun;
    w.tf = tf[noun];
    w.idf = idf.idf(noun);
    w.weight = static_cast<double>(w.tf) * w.idf;
    out.nouns.push_back(std::move(w));
  }
  return out;
}

GameScore score_game(const PromptAnalysis& analysis, std::span<const std::string> game_entities,
                     const EmbeddingTable& embeddings) {
  GameScore out;
  for (const auto& noun : analysis.nouns) {
    Contribution c;
    c.prompt_noun = noun.noun;
    const auto v = embeddings.lookup(noun.noun);
    bool any = false;
    double best = 0;
    if (v) {
      for (const auto& entity : game_entities) {
        const auto u = embeddings.lookup(entity);
        if (!u) continue;
        const double s = cosine(*v, *u);
        if (!any || s > best) {
          best = s;
          c.best_entity = entity;
          any = true;
        }
      }
    }
    c.max_similarity = any ? best : 0.0;
    c.weighted_term = noun.weight * c.max_similarity;
    out.score += c.weighted_term;
    out.contributions.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ScoringIndex

ScoringIndex ScoringIndex::build(const Corpus& corpus, const EmbeddingTable& embeddings) {
  ScoringIndex idx;
  std::unordered_map<Eigen::Index, std::uint32_t> row_of;
  std::vector<Eigen::Index> sources;
  idx.offsets_.reserve(corpus.size() + 1);
  idx.offsets_.push_back(0);
  for (const auto& game : corpus.records()) {
    for (const auto& e : game.entities) {
      const auto src = embeddings.index_of(e);
      if (!src) continue;
      auto [it, inserted] = row_of.try_emplace(*src, static_cast<std::uint32_t>(sources.size()));
      if (inserted) {
        sources.push_back(*src);
        idx.words_.push_back(e);
      }
      idx.entity_rows_.push_back(it->second);
    }
    idx.offsets_.push_back(idx.entity_rows_.size());
  }
  idx.units_.resize(static_cast<Eigen::Index>(sources.size()), embeddings.dimension());
  for (std::size_t r = 0; r < sources.size(); ++r) {
    const auto v = embeddings.row(sources[r]);
    const double n = v.norm();
    if (n > 0)
      idx.units_.row(static_cast<Eigen::Index>(r)) = v.transpose() / n;
    else
      idx.units_.row(static_cast<Eigen::Index>(r)).setZero();
  }
  return idx;
}

namespace {

constexpr char kIndexMagic[8] = {'G', 'F', 'I', 'D', 'X', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

void ScoringIndex::save(const std::filesystem::path& path, std::uint64_t corpus_fingerprint,
                        std::uint64_t embeddings_fingerprint) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write index cache: " + path.string());
  out.write(kIndexMagic, sizeof kIndexMagic);
  put(out, corpus_fingerprint);
  put(out, embeddings_fingerprint);
  put(out, static_cast<std::uint64_t>(units_.rows()));
  put(out, static_cast<std::uint64_t>(units_.cols()));
  put(out, static_cast<std::uint64_t>(games()));
  for (const auto& w : words_) {
    put(out, static_cast<std::uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  out.write(reinterpret_cast<const char*>(units_.data()),
            static_cast<std::streamsize>(units_.size() * sizeof(double)));
  for (auto o : offsets_) put(out, static_cast<std::uint64_t>(o));
  out.write(reinterpret_cast<const char*>(entity_rows_.data()),
            static_cast<std::streamsize>(entity_rows_.size() * sizeof(std::uint32_t)));
  if (!out) throw Error("write failed: " + path.string());
}

std::optional<ScoringIndex> ScoringIndex::load(const std::filesystem::path& path,
                                               std::uint64_t corpus_fingerprint,
                                               std::uint64_t embeddings_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kIndexMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kIndexMagic, sizeof magic) != 0)
    return std::nullopt;
  std::uint64_t cfp = 0, efp = 0, rows = 0, cols = 0, games = 0;
  if (!get(in, cfp) || !get(in, efp) || !get(in, rows) || !get(in, cols) || !get(in, games))
    return std::nullopt;
  if (cfp != corpus_fingerprint || efp != embeddings_fingerprint) return std::nullopt;

  ScoringIndex idx;
  idx.words_.resize(rows);
  for (auto& w : idx.words_) {
    std::uint32_t len = 0;
    if (!get(in, len)) return std::nullopt;
    w.resize(len);
    if (!in.read(w.data(), len)) return std::nullopt;
  }
  idx.units_.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (!in.read(reinterpret_cast<char*>(idx.units_.data()),
               static_cast<std::streamsize>(idx.units_.size() * sizeof(double))))
    return std::nullopt;
  idx.offsets_.resize(games + 1);
  for (auto& o : idx.offsets_) {
    std::uint64_t v = 0;
    if (!get(in, v)) return std::nullopt;
    o = v;
  }
  idx.entity_rows_.resize(idx.offsets_.back());
  if (!in.read(reinterpret_cast<char*>(idx.entity_rows_.data()),
               static_cast<std::streamsize>(idx.entity_rows_.size() * sizeof(std::uint32_t))))
    return std::nullopt;
  for (auto r : idx.entity_rows_) {
    if (r >= rows) return std::nullopt;
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Recommender

namespace {

// Row maxima of the similarity matrix restricted to one game's entities,
// weighted and summed in noun order. Both the bulk scan and the explain path
// go through here so their scores agree bit for bit.
double accumulate(const ScoringIndex::Matrix& sims, std::span<const std::uint32_t> entities,
                  std::span<const double> weights, std::span<double> best,
                  std::span<std::int64_t> arg) {
  const auto n = weights.size();
  if (entities.empty()) {
    std::fill(best.begin(), best.end(), 0.0);
    std::fill(arg.begin(), arg.end(), -1);
  } else {
    std::fill(best.begin(), best.end(), -std::numeric_limits<double>::infinity());
    for (const auto e : entities) {
      const double* row = sims.data() + static_cast<std::size_t>(e) * n;
      for (std::size_t i = 0; i < n; ++i) {
        if (row[i] > best[i]) {
          best[i] = row[i];
          arg[i] = e;
        }
      }
    }
  }
  double score = 0;
  for (std::size_t i = 0; i < n; ++i) score += weights[i] * best[i];
  return score;
}

bool ranks_before(double sa, const std::string& ida, double sb, const std::string& idb) {
  if (sa != sb) return sa > sb;
  return ida < idb;
}

}  // namespace

Recommender::Recommender(const Corpus& corpus, const EmbeddingTable& embeddings)
    : Recommender(corpus, embeddings, ScoringIndex::build(corpus, embeddings)) {}

Recommender::Recommender(const Corpus& corpus, const EmbeddingTable& embeddings,
                         ScoringIndex index)
    : corpus_(&corpus), embeddings_(&embeddings), index_(std::move(index)) {
  if (index_.games() != corpus.size())
    throw std::invalid_argument("scoring index does not match the corpus");
}

ScoringIndex::Matrix Recommender::similarity(const PromptAnalysis& analysis) const {
  const auto n = static_cast<Eigen::Index>(analysis.nouns.size());
  ScoringIndex::Matrix prompt(n, embeddings_->dimension());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = embeddings_->lookup(analysis.nouns[static_cast<std::size_t>(i)].noun);
    if (!v) throw std::invalid_argument("prompt noun missing from embedding table");
    const double norm = v->norm();
    if (norm > 0)
      prompt.row(i) = v->transpose() / norm;
    else
      prompt.row(i).setZero();
  }
  ScoringIndex::Matrix sims = index_.units() * prompt.transpose();
  return sims.cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<double> Recommender::score_all(const PromptAnalysis& analysis,
                                           unsigned threads) const {
  const auto sims = similarity(analysis);
  std::vector<double> weights;
  for (const auto& w : analysis.nouns) weights.push_back(w.weight);

  const std::size_t games = corpus_->size();
  std::vector<double> scores(games, 0.0);
  auto work = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> best(weights.size());
    std::vector<std::int64_t> arg(weights.size());
    for (std::size_t g = lo; g < hi; ++g)
      scores[g] = accumulate(sims, index_.entities_of(g), weights, best, arg);
  };

  threads = std::max(1u, threads);
  if (threads == 1 || games < 2 * threads) {
    work(0, games);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (games + threads - 1) / threads;
    for (std::size_t lo = 0; lo < games; lo += chunk)
      pool.emplace_back(work, lo, std::min(games, lo + chunk));
  }
  return scores;
}

GameScore Recommender::explain(const PromptAnalysis& analysis, const ScoringIndex::Matrix& sims,
                               std::size_t game) const {
  std::vector<double> weights;
  for (const auto& w : analysis.nouns) weights.push_back(w.weight);
  std::vector<double> best(weights.size());
  std::vector<std::int64_t> arg(weights.size(), -1);
  GameScore out;
  out.score = accumulate(sims, index_.entities_of(game), weights, best, arg);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Contribution c;
    c.prompt_noun = analysis.nouns[i].noun;
    if (arg[i] >= 0) c.best_entity = index_.word(static_cast<std::size_t>(arg[i]));
    c.max_similarity = best[i];
    c.weighted_term = weights[i] * best[i];
    out.contributions.push_back(std::move(c));
  }
  return out;
}

RecommendationContext Recommender::recommend(const PromptAnalysis& analysis, std::size_t k,
                                             unsigned threads) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (analysis.empty()) throw NoUsableNouns();

  const auto scores = score_all(analysis, threads);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return ranks_before(scores[a], (*corpus_)[a].id, scores[b],
                                          (*corpus_)[b].id);
                    });

  RecommendationContext ctx;
  ctx.prompt = analysis;
  const auto sims = similarity(analysis);
  std::unordered_set<std::string> tags_seen;
  std::unordered_set<std::string> entities_seen;
  for (std::size_t r = 0; r < take; ++r) {
    const auto g = order[r];
    const auto& game = (*corpus_)[g];
    auto ex = explain(analysis, sims, g);
    ctx.top_games.push_back(Recommendation{game.id, ex.score, std::move(ex.contributions)});
    for (const auto& t : game.tags)
      if (tags_seen.insert(t).second) ctx.pooled_tags.push_back(t);
    for (const auto& e : game.entities)
      if (entities_seen.insert(e).second) ctx.pooled_entities.push_back(e);
  }
  return ctx;
}

nlohmann::json to_json(const PromptAnalysis& a) {
  auto nouns = nlohmann::json::array();
  for (const auto& n : a.nouns)
    nouns.push_back({{"noun", n.noun}, {"tf", n.tf}, {"idf", n.idf}, {"weight", n.weight}});
  return {{"prompt", a.raw}, {"nouns", nouns}, {"skipped", a.skipped}};
}

nlohmann::json to_json(const Recommendation& r) {
  auto contributions = nlohmann::json::array();
  for (const auto& c : r.contributions) {
    contributions.push_back(
        {{"prompt_noun", c.prompt_noun},
         {"best_entity", c.best_entity.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.best_entity)},
         {"max_similarity", c.max_similarity},
         {"weighted_term", c.weighted_term}});
  }
  return {{"game_id", r.game_id}, {"score", r.score}, {"contributions", contributions}};
}

nlohmann::json to_json(const RecommendationContext& ctx) {
  auto games = nlohmann::json::array();
  for (const auto& r : ctx.top_games) games.push_back(to_json(r));
  return {{"analysis", to_json(ctx.prompt)},
          {"games", games},
          {"pooled_tags", ctx.pooled_tags},
          {"pooled_entities", ctx.pooled_entities}};
}

RecommendationContext recommend(const PromptAnalysis& analysis, const Corpus& corpus,
                                const EmbeddingTable& embeddings, std::size_t k) {
  return Recommender(corpus, embeddings).recommend(analysis, k);
}

}  // namespace gamefeat
