#pragma once

// Shared by the unit tests and the acceptance binary. The oracle here is a
// deliberately naive re-derivation of the scoring rule: nested loops over
// plain std::vector<double>, no Eigen, no index, no caching.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gamefeat/corpus.hpp"
#include "gamefeat/embedding.hpp"
#include "gamefeat/recommender.hpp"
#include "gamefeat/textproc.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(GAMEFEAT_FIXTURES) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "gf") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const gamefeat::LexiconTagger& shipped_tagger() {
  static const auto tagger = gamefeat::LexiconTagger::from_file(GAMEFEAT_DEFAULT_LEXICON);
  return tagger;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

using Vec = std::vector<double>;
using VecMap = std::unordered_map<std::string, Vec>;

inline double oracle_cosine(const Vec& a, const Vec& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct OracleNoun {
  std::string noun;
  double weight;
};

/// sum_i w_i * max_j cos(v_i, u_j); entities without a vector are skipped,
/// a game with none scores 0 on every noun.
inline double oracle_score(const std::vector<OracleNoun>& prompt,
                           const std::vector<std::string>& entities, const VecMap& vecs) {
  double score = 0;
  for (const auto& p : prompt) {
    const auto& v = vecs.at(p.noun);
    bool any = false;
    double best = 0;
    for (const auto& e : entities) {
      const auto it = vecs.find(e);
      if (it == vecs.end()) continue;
      const double c = oracle_cosine(v, it->second);
      if (!any || c > best) best = c;
      any = true;
    }
    score += p.weight * (any ? best : 0.0);
  }
  return score;
}

/// Game ids ordered by score desc, then id asc.
inline std::vector<std::string> oracle_ranking(const std::vector<std::string>& ids,
                                               const std::vector<double>& scores) {
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : ids[a] < ids[b];
  });
  std::vector<std::string> out;
  for (auto i : order) out.push_back(ids[i]);
  return out;
}

/// ln((1+N)/(1+df)) + 1 over entity-set membership, recomputed from scratch.
inline double oracle_idf(const std::vector<std::vector<std::string>>& entity_lists,
                         const std::string& word) {
  std::size_t df = 0;
  for (const auto& list : entity_lists)
    if (std::find(list.begin(), list.end(), word) != list.end()) ++df;
  const double n = static_cast<double>(entity_lists.size());
  return std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0;
}

// ---------------------------------------------------------------------------
// Random instances

struct RandomInstance {
  std::vector<std::string> words;
  VecMap vecs;
  gamefeat::EmbeddingTable table;
  std::vector<gamefeat::GameRecord> games;
  std::vector<OracleNoun> prompt;
};

inline gamefeat::GameRecord make_game(std::string id, std::vector<std::string> entities,
                                      std::vector<std::string> tags = {}) {
  gamefeat::GameRecord g;
  g.id = std::move(id);
  g.title = g.id;
  g.tags = std::move(tags);
  g.entities = std::move(entities);
  gamefeat::FeaturePhrase f;
  f.verb = "use";
  f.noun = g.entities.empty() ? "thing" : g.entities.front();
  f.raw = "use " + f.noun;
  g.features.push_back(f);
  return g;
}

inline gamefeat::EmbeddingTable table_from(const std::vector<std::string>& words,
                                           const VecMap& vecs, Eigen::Index dim) {
  gamefeat::EmbeddingTable::Matrix m(static_cast<Eigen::Index>(words.size()), dim);
  for (std::size_t r = 0; r < words.size(); ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), c) = vecs.at(words[r])[c];
  return gamefeat::EmbeddingTable(words, std::move(m));
}

/// Up to `max_games` games with up to `max_entities` entities each over a
/// random vocabulary; a few entity words are left without vectors. The
/// prompt has 1..6 embeddable nouns with positive weights.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_games = 50,
                                      std::size_t max_entities = 20, Eigen::Index dim = 8) {
  RandomInstance inst;
  std::uniform_int_distribution<int> vocab_size(5, 80);
  const int v = vocab_size(rng);
  std::normal_distribution<double> normal;
  for (int i = 0; i < v; ++i) {
    const auto w = "w" + std::to_string(i);
    inst.words.push_back(w);
    Vec vec(static_cast<std::size_t>(dim));
    for (auto& x : vec) x = normal(rng);
    if (i % 17 == 3) std::fill(vec.begin(), vec.end(), 0.0);  // zero vector
    inst.vecs[w] = vec;
  }
  inst.table = table_from(inst.words, inst.vecs, dim);

  std::uniform_int_distribution<std::size_t> ngames(1, max_games);
  std::uniform_int_distribution<std::size_t> nent(0, max_entities);
  std::uniform_int_distribution<int> pick(0, v - 1);
  std::uniform_int_distribution<int> oov(0, 9);
  const auto g = ngames(rng);
  for (std::size_t i = 0; i < g; ++i) {
    std::vector<std::string> ents;
    const auto m = nent(rng);
    for (std::size_t j = 0; j < m; ++j) {
      auto w = oov(rng) == 0 ? "oov" + std::to_string(pick(rng)) : inst.words[pick(rng)];
      if (std::find(ents.begin(), ents.end(), w) == ents.end()) ents.push_back(w);
    }
    char id[32];
    std::snprintf(id, sizeof id, "game%03zu", i);
    inst.games.push_back(make_game(id, ents));
  }

  std::uniform_int_distribution<int> nnouns(1, 6);
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  const int k = nnouns(rng);
  for (int i = 0; i < k; ++i) {
    const auto& w = inst.words[pick(rng)];
    if (std::none_of(inst.prompt.begin(), inst.prompt.end(),
                     [&](const OracleNoun& n) { return n.noun == w; }))
      inst.prompt.push_back({w, weight(rng)});
  }
  return inst;
}

inline gamefeat::PromptAnalysis analysis_from(const std::vector<OracleNoun>& prompt) {
  gamefeat::PromptAnalysis a;
  for (const auto& p : prompt) a.nouns.push_back({p.noun, 1, p.weight, p.weight});
  return a;
}

inline std::vector<std::string> ids_of(const std::vector<gamefeat::GameRecord>& games) {
  std::vector<std::string> ids;
  for (const auto& g : games) ids.push_back(g.id);
  return ids;
}

}  // namespace testsupport
