#include "gamefeat/cli.hpp"

// Eigen before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "gamefeat/engine.hpp"
#include "gamefeat/error.hpp"
#include "gamefeat/service.hpp"

#include <httplib.h>
#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

namespace gamefeat {

using nlohmann::json;

namespace {

// Raised for flag combinations CLI11 cannot express; exits 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EngineFlags {
  std::string lexicon = GAMEFEAT_DEFAULT_LEXICON;
  std::string corpus;
  std::string embeddings;
  int dim = 50;
  std::string index_cache;
  std::string offline_edges;
  std::string edge_cache;
  bool live_conceptnet = false;
  std::string conceptnet_url = "http://api.conceptnet.io";
  std::string external_backend;
  unsigned threads = 1;

  void add_lexicon(CLI::App* cmd) {
    cmd->add_option("--lexicon", lexicon, "POS lexicon (word<TAB>TAG)")->envname("GAMEFEAT_LEXICON")
        ->check(CLI::ExistingFile);
  }
  void add_scoring(CLI::App* cmd) {
    add_lexicon(cmd);
    cmd->add_option("--corpus", corpus, "corpus file written by ingest")
        ->envname("GAMEFEAT_CORPUS")
        ->check(CLI::ExistingFile);
    cmd->add_option("--embeddings", embeddings, "GloVe-format text vectors")
        ->envname("GAMEFEAT_EMBEDDINGS")
        ->check(CLI::ExistingFile);
    cmd->add_option("--dim", dim, "embedding dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--index-cache", index_cache, "scoring index cache file");
    cmd->add_option("--threads", threads, "scoring threads")->check(CLI::PositiveNumber);
  }
  void add_generators(CLI::App* cmd) {
    cmd->add_option("--offline-edges", offline_edges, "edge fixture (start rel end weight)")
        ->envname("GAMEFEAT_OFFLINE_EDGES")
        ->check(CLI::ExistingFile);
    cmd->add_option("--edge-cache", edge_cache, "append-only cache for fetched edges");
    cmd->add_flag("--live-conceptnet", live_conceptnet, "query the public API");
    cmd->add_option("--conceptnet-url", conceptnet_url, "API origin for --live-conceptnet");
    cmd->add_option("--external-backend", external_backend, "URL of an external text generator");
  }

  bool scoring() const { return !corpus.empty() && !embeddings.empty(); }

  EngineConfig config() const {
    EngineConfig c;
    c.lexicon = lexicon;
    if (!corpus.empty()) c.corpus = corpus;
    if (!embeddings.empty()) c.embeddings = embeddings;
    c.dimension = dim;
    if (!index_cache.empty()) c.index_cache = index_cache;
    if (!offline_edges.empty()) c.offline_edges = offline_edges;
    if (!edge_cache.empty()) c.edge_cache = edge_cache;
    c.live_conceptnet = live_conceptnet;
    c.conceptnet_url = conceptnet_url;
    if (!external_backend.empty()) c.external_backend = external_backend;
    c.threads = threads;
    return c;
  }
};

void require_scoring(const EngineFlags& f, const std::string& what) {
  if (!f.scoring()) throw UsageError(what + " needs --corpus and --embeddings");
}

void print_recommendations(const RecommendationContext& ctx, bool explain, bool jsonl,
                           std::ostream& out) {
  if (jsonl) {
    for (std::size_t i = 0; i < ctx.top_games.size(); ++i) {
      auto rec = to_json(ctx.top_games[i]);
      rec["rank"] = i + 1;
      if (!explain) rec.erase("contributions");
      out << rec.dump() << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < ctx.top_games.size(); ++i) {
    const auto& r = ctx.top_games[i];
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", r.score);
    out << i + 1 << '\t' << r.game_id << '\t' << score << '\n';
    if (!explain) continue;
    for (std::size_t j = 0; j < r.contributions.size(); ++j) {
      const auto& c = r.contributions[j];
      const auto& w = ctx.prompt.nouns[j];
      char line[160];
      std::snprintf(line, sizeof line, "\t%s tf=%zu idf=%.4f max_cos=%.4f -> %.6f",
                    c.prompt_noun.c_str(), w.tf, w.idf, c.max_similarity, c.weighted_term);
      out << line << " (" << (c.best_entity.empty() ? "-" : c.best_entity) << ")\n";
    }
  }
}

void print_features(const std::vector<GeneratedFeature>& features, bool jsonl, std::ostream& out) {
  for (const auto& f : features) {
    if (jsonl)
      out << to_json(f).dump() << '\n';
    else
      out << f.text << '\n';
  }
}

// Blocks SIGINT/SIGTERM in every thread and stops the server from a
// dedicated waiter once one arrives.
int serve_until_signal(httplib::Server& server, const std::string& host, int port,
                       std::ostream& out, std::ostream& err) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &set, &previous);

  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    err << "error: cannot bind " << host << ':' << port << '\n';
    return kExitRuntime;
  }
  out << "listening on http://" << host << ':' << bound << std::endl;

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    const timespec tick{0, 200'000'000};
    while (!done.load()) {
      if (sigtimedwait(&set, nullptr, &tick) > 0) {
        server.stop();
        return;
      }
    }
  });
  const bool ok = server.listen_after_bind();
  done = true;
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  err << "server stopped\n";
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Game feature recommendation and generation"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a corpus file from raw NDJSON entries");
  std::string in_path, out_path;
  EngineFlags ingest_flags;
  ingest_cmd->add_option("--in", in_path, "raw entries, one JSON object per line")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", out_path, "corpus file to write")->required();
  ingest_flags.add_lexicon(ingest_cmd);

  // idf
  auto* idf_cmd = app.add_subcommand("idf", "Print document frequencies and idf weights");
  std::string idf_corpus;
  std::size_t idf_top = 0;
  std::vector<std::string> idf_words;
  idf_cmd->add_option("--corpus", idf_corpus, "corpus file")
      ->required()
      ->envname("GAMEFEAT_CORPUS")
      ->check(CLI::ExistingFile);
  idf_cmd->add_option("--top", idf_top, "only the N highest-idf words (0 = all)");
  idf_cmd->add_option("--word", idf_words, "look up specific words");

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "Rank corpus games against a prompt");
  EngineFlags rec_flags;
  std::string prompt;
  std::size_t k = 10;
  bool explain = false;
  std::string format = "text";
  rec_flags.add_scoring(rec_cmd);
  rec_cmd->add_option("--prompt", prompt, "one-sentence game description")->required();
  rec_cmd->add_option("--k", k, "number of games")->check(CLI::PositiveNumber);
  rec_cmd->add_flag("--explain", explain, "show per-noun contributions");
  rec_cmd->add_option("--format", format, "text or jsonl")->check(CLI::IsMember({"text", "jsonl"}));

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Generate candidate features for a prompt");
  EngineFlags gen_flags;
  std::string generator;
  std::size_t n = 5;
  SamplerConfig sampler;
  sampler.seed = 42;
  gen_flags.add_scoring(gen_cmd);
  gen_flags.add_generators(gen_cmd);
  gen_cmd->add_option("--generator", generator, "conceptnet, corpus or external")
      ->required()
      ->check(CLI::IsMember({"conceptnet", "corpus", "external"}));
  gen_cmd->add_option("--prompt", prompt, "one-sentence game description")->required();
  gen_cmd->add_option("-n", n, "number of features")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--k", k, "games in the recommendation context")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", sampler.seed, "sampler seed");
  gen_cmd->add_option("--temperature", sampler.temperature);
  gen_cmd->add_option("--top-k", sampler.top_k);
  gen_cmd->add_option("--top-p", sampler.top_p);
  gen_cmd->add_option("--repetition-penalty", sampler.repetition_penalty);
  gen_cmd->add_flag("--greedy", sampler.greedy, "always take the highest-weight candidate");
  gen_cmd->add_option("--format", format, "text or jsonl")->check(CLI::IsMember({"text", "jsonl"}));

  // bundle
  auto* bundle_cmd = app.add_subcommand("bundle", "Build an anonymized A/B/C study bundle");
  EngineFlags bundle_flags;
  std::vector<std::string> human;
  std::vector<std::string> generators;
  std::uint64_t bundle_seed = 0;
  std::string label_map_out, bundle_data_dir;
  bundle_flags.add_scoring(bundle_cmd);
  bundle_flags.add_generators(bundle_cmd);
  bundle_cmd->add_option("--prompt", prompt, "one-sentence game description")->required();
  bundle_cmd->add_option("--human", human, "a human-written feature (give 5)")
      ->required()
      ->expected(1, 5)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  bundle_cmd->add_option("--generators", generators, "two generator ids")
      ->required()
      ->expected(2)
      ->check(CLI::IsMember({"conceptnet", "corpus", "external"}));
  bundle_cmd->add_option("--seed", bundle_seed, "label permutation and sampler seed")->required();
  bundle_cmd->add_option("--k", k, "games in the recommendation context")->check(CLI::PositiveNumber);
  bundle_cmd->add_option("--label-map-out", label_map_out, "write the hidden label map here");
  bundle_cmd->add_option("--data-dir", bundle_data_dir, "also store the bundle under DIR/bundles")
      ->envname("GAMEFEAT_DATA_DIR");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON API");
  EngineFlags serve_flags;
  std::string addr = "127.0.0.1:8080";
  std::string data_dir;
  std::string static_dir;
  serve_flags.add_scoring(serve_cmd);
  serve_flags.add_generators(serve_cmd);
  serve_cmd->add_option("--addr", addr, "host:port (port 0 picks a free port)");
  serve_cmd->add_option("--data-dir", data_dir, "sessions and bundles")
      ->required()
      ->envname("GAMEFEAT_DATA_DIR");
  serve_cmd->add_option("--static-dir", static_dir, "UI bundle served under /")
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--k", k, "default number of games")->check(CLI::PositiveNumber);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const bool jsonl = format == "jsonl";

    if (*ingest_cmd) {
      const auto tagger = LexiconTagger::from_file(ingest_flags.lexicon);
      const TextPipeline pipeline(tagger);
      std::ifstream in(in_path);
      const auto report = ingest(in, pipeline, out_path);
      for (const auto& d : report.diagnostics) err << "warning: " << d << '\n';
      out << "read " << report.read << " kept " << report.kept << " dropped_no_features "
          << report.dropped_no_features << " dropped_empty " << report.dropped_empty
          << " malformed " << report.malformed << '\n';
      return kExitOk;
    }

    if (*idf_cmd) {
      const auto corpus = Corpus::load(idf_corpus);
      const auto table = compute_idf(corpus);
      std::vector<std::pair<std::string, std::size_t>> rows;
      if (idf_words.empty()) {
        rows.assign(table.frequencies().begin(), table.frequencies().end());
      } else {
        for (const auto& w : idf_words) rows.emplace_back(ascii_lower(w), table.document_frequency(ascii_lower(w)));
      }
      std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
      });
      if (idf_top > 0 && rows.size() > idf_top) rows.resize(idf_top);
      for (const auto& [word, df] : rows) {
        char value[32];
        std::snprintf(value, sizeof value, "%.6f", table.idf(word));
        out << word << '\t' << df << '\t' << value << '\n';
      }
      return kExitOk;
    }

    if (*rec_cmd) {
      require_scoring(rec_flags, "recommend");
      const auto engine = Engine::load(rec_flags.config());
      const auto ctx = engine->recommend(prompt, k);
      for (const auto& s : ctx.prompt.skipped) err << "skipped (no vector): " << s << '\n';
      print_recommendations(ctx, explain, jsonl, out);
      return kExitOk;
    }

    if (*gen_cmd) {
      sampler.validate();
      const auto id = *parse_generator_id(generator);
      if (id != GeneratorId::ConceptNet) require_scoring(gen_flags, "generator '" + generator + "'");
      if (id == GeneratorId::ConceptNet && gen_flags.offline_edges.empty() && !gen_flags.live_conceptnet)
        throw UsageError("generator 'conceptnet' needs --offline-edges or --live-conceptnet");
      if (id == GeneratorId::External && gen_flags.external_backend.empty())
        throw UsageError("generator 'external' needs --external-backend");
      err << "seed " << sampler.seed << '\n';
      const auto engine = Engine::load(gen_flags.config());
      std::vector<std::string> diagnostics;
      const auto features = engine->generate(id, prompt, n, sampler, k, &diagnostics);
      for (const auto& d : diagnostics) err << "warning: " << d << '\n';
      print_features(features, jsonl, out);
      return kExitOk;
    }

    if (*bundle_cmd) {
      if (human.size() != kStudySetSize) throw UsageError("--human must be given exactly 5 times");
      for (const auto& g : generators) {
        if (g != "conceptnet") require_scoring(bundle_flags, "generator '" + g + "'");
      }
      err << "seed " << bundle_seed << '\n';
      const auto engine = Engine::load(bundle_flags.config());
      const auto bundle = build_study_bundle(*engine, prompt, human, {generators[0], generators[1]},
                                             bundle_seed, k);
      if (!label_map_out.empty()) {
        std::ofstream lm(label_map_out);
        lm << json{{"id", bundle.id}, {"label_map", bundle.label_map_json()}}.dump(2) << '\n';
        if (!lm) throw Error("cannot write " + label_map_out);
      }
      if (!bundle_data_dir.empty()) StudyStore(std::filesystem::path(bundle_data_dir) / "bundles").put(bundle);
      out << bundle.public_json().dump() << '\n';
      return kExitOk;
    }

    if (*serve_cmd) {
      const auto colon = addr.rfind(':');
      int port = -1;
      if (colon != std::string::npos) {
        try {
          port = std::stoi(addr.substr(colon + 1));
        } catch (const std::exception&) {
        }
      }
      if (colon == std::string::npos || colon == 0 || port < 0 || port > 65535)
        throw UsageError("--addr must be host:port");
      const auto host = addr.substr(0, colon);
      std::shared_ptr<const Engine> engine = Engine::load(serve_flags.config());
      if (!engine->can_recommend()) err << "warning: no corpus/embeddings; recommend answers 503\n";
      Service service(engine, data_dir, k);
      httplib::Server server;
      std::optional<std::filesystem::path> static_root;
      if (!static_dir.empty()) static_root = static_dir;
      service.mount(server, static_root);
      return serve_until_signal(server, host, port, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace gamefeat
