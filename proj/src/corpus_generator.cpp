#include "gamefeat/corpus_generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "gamefeat/error.hpp"
#include "gamefeat/rng.hpp"
#include "http_util.hpp"

namespace gamefeat {

using nlohmann::json;

void SamplerConfig::validate() const {
  if (!(temperature > 0) || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be > 0");
  if (top_k == 0) throw std::invalid_argument("top_k must be >= 1");
  if (!(top_p > 0 && top_p <= 1)) throw std::invalid_argument("top_p must be in (0, 1]");
  if (!(repetition_penalty > 0) || !std::isfinite(repetition_penalty))
    throw std::invalid_argument("repetition_penalty must be > 0");
}

GeneratorPrompt make_generator_prompt(const RecommendationContext& context) {
  return GeneratorPrompt{context.pooled_tags, context.pooled_entities};
}

// ---------------------------------------------------------------------------

Candidate& CandidatePool::add(const FeaturePhrase& parts, double weight) {
  auto text = parts.render();
  if (auto it = by_text_.find(text); it != by_text_.end()) {
    auto& c = candidates_[it->second];
    c.weight += weight;
    return c;
  }
  by_text_.emplace(text, candidates_.size());
  Candidate c;
  c.text = std::move(text);
  c.verb = parts.verb;
  c.article = parts.article;
  c.noun = parts.noun;
  c.weight = weight;
  candidates_.push_back(std::move(c));
  return candidates_.back();
}

const Candidate* CandidatePool::find(std::string_view text) const {
  const auto it = by_text_.find(std::string(text));
  return it == by_text_.end() ? nullptr : &candidates_[it->second];
}

void CandidatePool::finalize() {
  std::sort(candidates_.begin(), candidates_.end(),
            [](const Candidate& a, const Candidate& b) { return a.text < b.text; });
  by_text_.clear();
  for (std::size_t i = 0; i < candidates_.size(); ++i) by_text_.emplace(candidates_[i].text, i);
}

CandidatePool build_candidate_pool(const RecommendationContext& context, const Corpus& corpus) {
  struct Ranked {
    const GameRecord* game;
    double weight;
  };
  std::vector<Ranked> games;
  for (const auto& rec : context.top_games) {
    const auto* g = corpus.find(rec.game_id);
    if (!g) throw Error("recommended game '" + rec.game_id + "' is not in the corpus");
    games.push_back({g, std::max(rec.score, 0.0)});
  }

  CandidatePool pool;
  for (const auto& [game, weight] : games) {
    for (const auto& f : game->features) {
      auto& c = pool.add(f, weight);
      if (std::find(c.origin.retrieved_from.begin(), c.origin.retrieved_from.end(), game->id) ==
          c.origin.retrieved_from.end())
        c.origin.retrieved_from.push_back(game->id);
    }
  }

  auto distinct_verbs = [](const GameRecord& g) {
    std::vector<std::string> out;
    for (const auto& f : g.features)
      if (std::find(out.begin(), out.end(), f.verb) == out.end()) out.push_back(f.verb);
    return out;
  };
  auto distinct_objects = [](const GameRecord& g) {
    std::vector<std::pair<std::optional<std::string>, std::string>> out;
    for (const auto& f : g.features) {
      std::pair<std::optional<std::string>, std::string> obj{f.article, f.noun};
      if (std::find(out.begin(), out.end(), obj) == out.end()) out.push_back(std::move(obj));
    }
    return out;
  };
  auto share_tag = [](const GameRecord& a, const GameRecord& b) {
    return std::any_of(a.tags.begin(), a.tags.end(), [&](const std::string& t) {
      return std::find(b.tags.begin(), b.tags.end(), t) != b.tags.end();
    });
  };

  for (const auto& verb_side : games) {
    for (const auto& noun_side : games) {
      if (verb_side.game == noun_side.game || !share_tag(*verb_side.game, *noun_side.game))
        continue;
      const double w = 0.5 * std::sqrt(verb_side.weight * noun_side.weight);
      for (const auto& verb : distinct_verbs(*verb_side.game)) {
        for (const auto& [article, noun] : distinct_objects(*noun_side.game)) {
          FeaturePhrase parts{verb, article, noun, {}};
          auto& c = pool.add(parts, w);
          c.origin.recombined_from.emplace_back(verb_side.game->id, noun_side.game->id);
        }
      }
    }
  }

  if (pool.empty()) throw NoCandidates("recommended games carry no feature phrases");
  pool.finalize();
  return pool;
}

// ---------------------------------------------------------------------------

std::vector<GeneratedFeature> sample_features(const CandidatePool& pool,
                                              const SamplerConfig& config, std::size_t n) {
  config.validate();
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (pool.empty()) throw NoCandidates();

  const auto cands = pool.candidates();
  std::vector<double> weight;
  weight.reserve(cands.size());
  for (const auto& c : cands) weight.push_back(std::max(c.weight, 0.0));
  std::vector<bool> drawn(cands.size(), false);
  Rng rng(config.seed);

  std::vector<std::size_t> remaining;
  std::vector<double> mass(cands.size(), 0.0);
  std::vector<GeneratedFeature> out;
  const auto steps = std::min(n, cands.size());
  for (std::size_t step = 0; step < steps; ++step) {
    remaining.clear();
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (!drawn[i]) remaining.push_back(i);

    std::size_t pick = remaining.front();
    if (config.greedy) {
      // Candidates are in text order, so the first maximum is the
      // lexicographically smallest.
      for (auto i : remaining)
        if (weight[i] > weight[pick]) pick = i;
    } else {
      double wmax = 0;
      for (auto i : remaining) wmax = std::max(wmax, weight[i]);
      for (auto i : remaining)
        mass[i] = wmax > 0 ? std::pow(weight[i] / wmax, 1.0 / config.temperature) : 0.0;
      std::stable_sort(remaining.begin(), remaining.end(),
                       [&](std::size_t a, std::size_t b) { return mass[a] > mass[b]; });
      if (remaining.size() > config.top_k) remaining.resize(config.top_k);

      double total = 0;
      for (auto i : remaining) total += mass[i];
      if (total > 0) {
        double kept = 0;
        std::size_t prefix = 0;
        while (prefix < remaining.size()) {
          kept += mass[remaining[prefix]];
          ++prefix;
          if (kept >= config.top_p * total) break;
        }
        remaining.resize(prefix);
        const double u = rng.uniform() * kept;
        double acc = 0;
        pick = remaining.back();
        for (auto i : remaining) {
          acc += mass[i];
          if (u < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = remaining.front();
      }
    }

    drawn[pick] = true;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!drawn[i] && cands[i].noun == cands[pick].noun) weight[i] *= config.repetition_penalty;
    }
    out.push_back(GeneratedFeature{cands[pick].text, GeneratorId::Corpus, cands[pick].origin,
                                   cands[pick].weight});
  }
  return out;
}

// ---------------------------------------------------------------------------

json ExternalBackendRequest::to_json() const {
  return {{"tags", prompt.tags},
          {"entities", prompt.entities},
          {"n", n},
          {"temperature", config.temperature},
          {"top_k", config.top_k},
          {"top_p", config.top_p},
          {"repetition_penalty", config.repetition_penalty}};
}

ExternalBackendResponse ExternalBackendResponse::from_json(const json& body) {
  if (!body.is_object() || !body.contains("features") || !body["features"].is_array())
    throw ProtocolError("backend payload lacks a 'features' array");
  ExternalBackendResponse r;
  for (const auto& f : body["features"]) {
    if (!f.is_string()) throw ProtocolError("backend feature is not a string");
    r.features.push_back(f.get<std::string>());
  }
  return r;
}

HttpPolicy HttpExternalBackend::default_policy() {
  HttpPolicy p;
  p.politeness_delay = std::chrono::milliseconds(0);
  p.timeout = std::chrono::seconds(30);
  return p;
}

HttpExternalBackend::HttpExternalBackend(std::string url, HttpPolicy policy)
    : url_(std::move(url)), policy_(policy) {
  detail::split_url(url_);
}

ExternalBackendResponse HttpExternalBackend::complete(const ExternalBackendRequest& request) {
  const auto parts = detail::split_url(url_);
  httplib::Client cli(parts.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  const auto body = request.to_json().dump();

  std::string last_failure;
  auto backoff = policy_.initial_backoff;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = cli.Post(parts.path, body, "application/json");
    if (!res) {
      last_failure = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw ProtocolError("backend answered HTTP " + std::to_string(res->status));
    try {
      return ExternalBackendResponse::from_json(json::parse(res->body));
    } catch (const json::parse_error&) {
      throw ProtocolError("backend payload is not JSON");
    }
  }
  throw RetryableError("external backend unreachable after " +
                       std::to_string(policy_.max_retries + 1) + " attempts (" + last_failure +
                       ")");
}

std::vector<GeneratedFeature> generate_external(ExternalBackend& backend,
                                                const GeneratorPrompt& prompt,
                                                const SamplerConfig& config, std::size_t n,
                                                std::vector<std::string>* diagnostics) {
  config.validate();
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (prompt.tags.empty() && prompt.entities.empty())
    throw std::invalid_argument("generator prompt needs tags or entities");

  const auto response = backend.complete(ExternalBackendRequest{prompt, config, n});
  std::vector<GeneratedFeature> out;
  for (const auto& line : response.features) {
    if (out.size() == n) break;
    auto text = trim(line);
    if (text.empty()) continue;
    if (has_control_chars(text)) {
      if (diagnostics) diagnostics->push_back("dropped line with control characters");
      continue;
    }
    std::istringstream words(text);
    std::size_t count = 0;
    for (std::string w; words >> w;) ++count;
    if (count > kMaxExternalFeatureTokens) {
      if (diagnostics)
        diagnostics->push_back("dropped " + std::to_string(count) + "-token line: " + text);
      continue;
    }
    out.push_back(GeneratedFeature{std::move(text), GeneratorId::External,
                                   ExternalOrigin{backend.id()}, 1.0});
  }
  if (out.empty()) throw NoCandidates("external backend returned no usable lines");
  return out;
}

}  // namespace gamefeat
