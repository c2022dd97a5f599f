#include "gamefeat/conceptnet.hpp"

#include "http_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>

#include "gamefeat/error.hpp"
#include "gamefeat/textproc.hpp"

namespace gamefeat {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos
                                                                  : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

std::string concept_path(std::string_view noun) {
  std::string out = "/c/en/";
  for (char c : noun) out += (c == ' ') ? '_' : c;
  return out;
}

bool sort_edges(const SemanticEdge& a, const SemanticEdge& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.relation != b.relation) return a.relation < b.relation;
  return a.end < b.end;
}

json edge_list_json(const std::vector<SemanticEdge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) arr.push_back(to_json(e));
  return arr;
}

}  // namespace

// ---------------------------------------------------------------------------

FixtureEdgeSource FixtureEdgeSource::from_stream(std::istream& in) {
  std::vector<SemanticEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    const auto where = "edge fixture line " + std::to_string(line_no) + ": ";
    if (fields.size() != 4) throw FormatError(where + "expected 4 tab-separated fields", line_no);
    const auto rel = parse_relation(fields[1]);
    if (!rel) throw FormatError(where + "unsupported relation '" + std::string(fields[1]) + "'",
                                line_no);
    double w = 0;
    const auto wf = fields[3];
    const auto [ptr, ec] = std::from_chars(wf.data(), wf.data() + wf.size(), w);
    if (ec != std::errc{} || ptr != wf.data() + wf.size() || !std::isfinite(w) || w <= 0)
      throw FormatError(where + "weight must be a positive number", line_no);
    const auto end = trim(fields[2]);
    if (end.empty()) throw FormatError(where + "empty end phrase", line_no);
    edges.push_back(SemanticEdge{ascii_lower(trim(fields[0])), *rel, end, w});
  }
  return FixtureEdgeSource(std::move(edges));
}

FixtureEdgeSource FixtureEdgeSource::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge fixture: " + path.string());
  return from_stream(in);
}

std::vector<SemanticEdge> FixtureEdgeSource::query(std::string_view noun, Relation relation) {
  std::vector<SemanticEdge> out;
  for (const auto& e : edges_) {
    if (e.start == noun && e.relation == relation) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

LiveEdgeSource::LiveEdgeSource(std::string base_url, HttpPolicy policy)
    : base_url_(std::move(base_url)), policy_(policy) {
  detail::split_url(base_url_);
}

std::size_t LiveEdgeSource::requests_sent() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::vector<SemanticEdge> LiveEdgeSource::parse_edges(const json& body, std::string_view noun,
                                                      Relation relation) {
  if (!body.is_object() || !body.contains("edges") || !body["edges"].is_array())
    throw ProtocolError("edge payload lacks an 'edges' array");
  const auto node = concept_path(noun);
  const auto rel_id = "/r/" + std::string(to_string(relation));
  std::vector<SemanticEdge> out;
  for (const auto& e : body["edges"]) {
    if (!e.is_object()) throw ProtocolError("edge entry is not an object");
    const auto& start = e.value("start", json::object());
    const auto& rel = e.value("rel", json::object());
    const auto& end = e.value("end", json::object());
    if (!start.is_object() || !rel.is_object() || !end.is_object())
      throw ProtocolError("edge entry lacks start/rel/end objects");
    const auto start_id = start.value("@id", std::string{});
    if (start_id != node && !start_id.starts_with(node + "/")) continue;
    if (rel.value("@id", std::string{}) != rel_id && rel.value("label", std::string{}) != to_string(relation))
      continue;
    if (!e.contains("weight") || !e["weight"].is_number())
      throw ProtocolError("edge entry lacks a numeric weight");
    const double w = e["weight"].get<double>();
    auto phrase = trim(end.value("label", std::string{}));
    if (w <= 0 || phrase.empty() || has_control_chars(phrase)) continue;
    out.push_back(SemanticEdge{std::string(noun), relation, std::move(phrase), w});
  }
  return out;
}

std::vector<SemanticEdge> LiveEdgeSource::query(std::string_view noun, Relation relation) {
  std::lock_guard lock(mutex_);
  httplib::Client cli(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());

  const httplib::Params params = {{"node", concept_path(noun)},
                                  {"rel", "/r/" + std::string(to_string(relation))},
                                  {"limit", "1000"}};
  std::string last_failure;
  auto backoff = policy_.initial_backoff;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    if (any_request_) {
      const auto next = last_request_ + policy_.politeness_delay;
      const auto now = std::chrono::steady_clock::now();
      if (next > now) std::this_thread::sleep_for(next - now);
    }
    last_request_ = std::chrono::steady_clock::now();
    any_request_ = true;
    ++requests_;

    auto res = cli.Get("/query", params, httplib::Headers{});
    if (!res) {
      last_failure = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status == 404) return {};
    if (res->status != 200) throw ProtocolError("unexpected HTTP " + std::to_string(res->status));
    json body;
    try {
      body = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProtocolError("edge payload is not JSON");
    }
    return parse_edges(body, noun, relation);
  }
  throw RetryableError("semantic network unreachable after " +
                       std::to_string(policy_.max_retries + 1) + " attempts (" + last_failure +
                       ")");
}

// ---------------------------------------------------------------------------

CachedEdgeSource::CachedEdgeSource(std::unique_ptr<EdgeSource> upstream,
                                   std::filesystem::path cache_file)
    : upstream_(std::move(upstream)), cache_file_(std::move(cache_file)) {
  std::ifstream in(cache_file_);
  std::string line;
  while (std::getline(in, line)) {
    // A torn trailing line from an interrupted write is skipped.
    try {
      const auto j = json::parse(line);
      const auto rel = parse_relation(j.at("relation").get<std::string>());
      if (!rel) continue;
      std::vector<SemanticEdge> edges;
      for (const auto& e : j.at("edges")) {
        const auto er = parse_relation(e.at("relation").get<std::string>());
        if (!er) continue;
        edges.push_back(SemanticEdge{e.at("start").get<std::string>(), *er,
                                     e.at("end").get<std::string>(), e.at("weight").get<double>()});
      }
      cache_[{j.at("noun").get<std::string>(), *rel}] = std::move(edges);
    } catch (const std::exception&) {
      continue;
    }
  }
}

std::size_t CachedEdgeSource::cached_entries() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::vector<SemanticEdge> CachedEdgeSource::query(std::string_view noun, Relation relation) {
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(std::string(noun), relation);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto edges = upstream_->query(noun, relation);
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  const json entry = {{"noun", key.first},
                      {"relation", std::string(to_string(relation))},
                      {"fetched_at", now},
                      {"edges", edge_list_json(edges)}};
  std::ofstream out(cache_file_, std::ios::app);
  out << entry.dump() << '\n';
  cache_.emplace(key, edges);
  return edges;
}

// ---------------------------------------------------------------------------

ConceptNetClient::ConceptNetClient(std::unique_ptr<EdgeSource> source)
    : source_(std::move(source)) {}

std::vector<SemanticEdge> ConceptNetClient::fetch_edges(std::string_view noun) {
  std::vector<SemanticEdge> out;
  for (auto rel : {Relation::CapableOf, Relation::UsedFor}) {
    const auto key = std::make_pair(std::string(noun), rel);
    std::vector<SemanticEdge> edges;
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) {
        edges = it->second;
      } else {
        for (auto& e : source_->query(noun, rel)) {
          if (e.start == noun && e.relation == rel && e.weight > 0) edges.push_back(std::move(e));
        }
        memo_.emplace(key, edges);
      }
    }
    out.insert(out.end(), edges.begin(), edges.end());
  }
  std::stable_sort(out.begin(), out.end(), sort_edges);
  return out;
}

std::vector<GeneratedFeature> generate_conceptnet(std::span<const std::string> entities,
                                                  ConceptNetClient& client, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (entities.empty()) throw NoUsableNouns();

  std::vector<GeneratedFeature> features;
  std::unordered_map<std::string, std::size_t> by_key;
  std::unordered_set<std::string> queried;
  for (const auto& entity : entities) {
    if (!queried.insert(entity).second) continue;
    for (auto& edge : client.fetch_edges(entity)) {
      auto text = trim(edge.end);
      if (text.empty() || has_control_chars(text)) continue;
      const auto key = ascii_lower(text);
      const double w = edge.weight;
      if (auto it = by_key.find(key); it != by_key.end()) {
        auto& kept = features[it->second];
        if (w > kept.score) {
          kept.text = std::move(text);
          kept.score = w;
          kept.provenance = std::move(edge);
        }
        continue;
      }
      by_key.emplace(key, features.size());
      features.push_back(GeneratedFeature{std::move(text), GeneratorId::ConceptNet,
                                          std::move(edge), w});
    }
  }
  if (features.empty()) throw NoCandidates("no CapableOf/UsedFor edges for the prompt entities");

  std::stable_sort(features.begin(), features.end(),
                   [](const GeneratedFeature& a, const GeneratedFeature& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.text < b.text;
                   });
  if (features.size() > n) features.resize(n);
  return features;
}

}  // namespace gamefeat
