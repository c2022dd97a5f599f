#include <doctest.h>

#include <fstream>
#include <set>

#include "gamefeat/error.hpp"
#include "gamefeat/service.hpp"
#include "support.hpp"
#include "mock_server.hpp"

using namespace gamefeat;
using nlohmann::json;

namespace {

std::shared_ptr<const Engine> fixture_engine(bool with_edges = true) {
  static const auto records = [] {
    std::ifstream in(testsupport::fixture("games.ndjson"));
    const TextPipeline p(testsupport::shipped_tagger());
    return build_records(in, p).records;
  }();
  std::unique_ptr<ConceptNetClient> cn;
  if (with_edges)
    cn = std::make_unique<ConceptNetClient>(std::make_unique<FixtureEdgeSource>(
        FixtureEdgeSource::from_file(testsupport::fixture("edges.tsv"))));
  return std::make_shared<Engine>(testsupport::shipped_tagger(), Corpus(records),
                                  load_embeddings(testsupport::fixture("embeddings50.txt"), 50),
                                  std::move(cn));
}

const json kHuman = {"chop vegetables", "serve customers", "sell onigiri", "grow rice",
                     "upgrade your kitchen"};

json bundle_request(std::uint64_t seed) {
  return {{"prompt", "You chop onions with a knife in your home."},
          {"human_features", kHuman},
          {"generators", {"conceptnet", "corpus"}},
          {"seed", seed}};
}

std::vector<std::string> texts(const json& features) {
  std::vector<std::string> out;
  for (const auto& f : features) out.push_back(f.at("text").get<std::string>());
  return out;
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("recommend: errors and success") {
    testsupport::TempDir dir;
    Service svc(fixture_engine(), dir.path());
    auto r = svc.recommend({{"prompt", ""}});
    CHECK(r.status == 400);
    CHECK(r.body.at("code") == "no_usable_nouns");
    CHECK(svc.recommend({{"prompt", "build a tower"}, {"k", 0}}).status == 400);
    CHECK(svc.recommend({{"k", 3}}).status == 400);
    CHECK(svc.recommend(json::array()).status == 400);

    r = svc.recommend({{"prompt", "You build a tower and defend it."}, {"k", 4}});
    REQUIRE(r.status == 200);
    const auto& games = r.body.at("games");
    REQUIRE(games.size() == 4);
    for (std::size_t i = 1; i < games.size(); ++i)
      CHECK(games[i - 1].at("score").get<double>() >= games[i].at("score").get<double>());
    CHECK(games[0].at("game_id") == "g01");
    CHECK(games[0].at("contributions").size() == r.body.at("analysis").at("nouns").size());

    r = svc.recommend({{"prompt", "A zzzxqj and a tower."}});
    CHECK(r.body.at("analysis").at("skipped") == json::array({"zzzxqj"}));

    Service empty(nullptr, dir.path());
    CHECK(empty.recommend({{"prompt", "a tower"}}).status == 503);
  }

  TEST_CASE("generate: determinism, offline edges, unknown generator") {
    testsupport::TempDir dir;
    Service svc(fixture_engine(), dir.path());
    const json req = {{"prompt", "A team shooter where you capture the flag."},
                      {"generator", "corpus"},
                      {"seed", 9},
                      {"n", 5}};
    const auto a = svc.generate(req);
    REQUIRE(a.status == 200);
    CHECK(a.body.dump() == svc.generate(req).body.dump());
    CHECK(a.body.at("features").size() == 5);
    CHECK(a.body.at("features")[0].contains("provenance"));

    const auto cn = svc.generate(
        {{"prompt", "An onion, a knife and a home."}, {"generator", "conceptnet"}, {"n", 5}});
    REQUIRE(cn.status == 200);
    CHECK(texts(cn.body.at("features")) ==
          std::vector<std::string>{"cooking", "cut things", "relaxing", "make you cry", "cutting"});

    const auto bogus = svc.generate({{"prompt", "x"}, {"generator", "bogus"}});
    CHECK(bogus.status == 400);
    CHECK(bogus.body.at("code") == "unknown_generator");
    CHECK(svc.generate({{"prompt", "a tower"}, {"generator", "external"}}).status == 503);
    CHECK(svc.generate({{"prompt", "a tower"}, {"generator", "corpus"}, {"config", {{"top_p", 2}}}})
              .status == 400);
    const auto none = svc.generate({{"prompt", "A zzzxqj."}, {"generator", "conceptnet"}});
    CHECK(none.status == 404);
    CHECK(none.body.at("code") == "no_candidates");
  }

  TEST_CASE("sessions: accept, supersede, restart") {
    testsupport::TempDir dir;
    std::string id;
    json before;
    {
      Service svc(nullptr, dir.path());
      const auto created = svc.create_session({{"prompt", "A cooking game."}});
      REQUIRE(created.status == 201);
      id = created.body.at("id");

      auto d = svc.decide(id, {{"feature", {{"text", "cut things"}}}, {"verdict", "accepted"}});
      REQUIRE(d.status == 200);
      auto s = svc.get_session(id);
      CHECK(s.body.at("tally").at("accepted") == 1);

      svc.decide(id, {{"feature", "cut things"}, {"verdict", "rejected"}});
      s = svc.get_session(id);
      CHECK(s.body.at("decisions").size() == 2);
      CHECK(s.body.at("tally").at("live").at("cut things") == "rejected");
      CHECK(s.body.at("tally").at("accepted") == 0);
      svc.decide(id, {{"feature", "cooking"}, {"verdict", "accept"}, {"note", "keep"}});
      before = svc.get_session(id).body;

      CHECK(svc.decide("ffff", {{"feature", "x"}, {"verdict", "accepted"}}).status == 404);
      CHECK(svc.decide(id, {{"feature", "x"}, {"verdict", "maybe"}}).status == 409);
      CHECK(svc.decide(id, {{"feature", {{"no", "text"}}}, {"verdict", "accepted"}}).status == 409);
      CHECK(svc.get_session("ffff").status == 404);
    }
    Service again(nullptr, dir.path());
    CHECK(again.get_session(id).body == before);
  }

  TEST_CASE("sessions: replaying the log reproduces the tally") {
    testsupport::TempDir dir;
    SessionStore store(dir.path());
    const auto s = store.create("p");
    const std::vector<std::pair<std::string, Verdict>> events = {
        {"a", Verdict::Accepted}, {"b", Verdict::Rejected}, {"a", Verdict::Rejected},
        {"c", Verdict::Accepted}, {"b", Verdict::Accepted}};
    for (const auto& [t, v] : events) store.decide(s.id, {{"text", t}}, v);
    // torn final line, never acknowledged
    std::ofstream(dir / (s.id + ".log"), std::ios::app) << R"({"type":"decided","feat)";
    SessionStore reopened(dir.path());
    const auto r = reopened.get(s.id);
    REQUIRE(r);
    CHECK(r->decisions.size() == 5);
    const auto t = r->tally();
    CHECK(t.accepted == 2);
    CHECK(t.rejected == 1);
    CHECK(t.live.at("a") == Verdict::Rejected);
    // the store still accepts appends after a torn line
    reopened.decide(s.id, {{"text", "d"}}, Verdict::Accepted);
    CHECK(SessionStore(dir.path()).get(s.id)->decisions.size() == 6);
  }

  TEST_CASE("study bundle: seeded labels, no leaked sources, unblind") {
    testsupport::TempDir dir;
    Service svc(fixture_engine(), dir.path());
    const auto a = svc.create_bundle(bundle_request(7));
    REQUIRE(a.status == 201);
    const auto pub = a.body.dump();
    for (const char* word : {"human", "conceptnet", "corpus", "label_map", "source"})
      CHECK(pub.find(word) == std::string::npos);
    REQUIRE(a.body.at("sets").size() == 3);
    std::set<std::string> labels;
    for (const auto& s : a.body.at("sets")) {
      CHECK(s.at("features").size() == 5);
      labels.insert(s.at("label").get<std::string>());
    }
    CHECK(labels == std::set<std::string>{"A", "B", "C"});

    CHECK(svc.create_bundle(bundle_request(7)).body == a.body);
    const auto id = a.body.at("id").get<std::string>();
    const auto got = svc.get_bundle(id);
    CHECK(got.body == a.body);
    CHECK(got.body.dump().find("human") == std::string::npos);

    const auto map = svc.unblind(id);
    REQUIRE(map.status == 200);
    std::multiset<std::string> sources;
    for (const auto& [label, src] : map.body.at("label_map").items()) sources.insert(src.get<std::string>());
    CHECK(sources == std::multiset<std::string>{"conceptnet", "corpus", "human"});
    // the human set sits under the label the map names
    for (const auto& s : a.body.at("sets"))
      if (map.body.at("label_map").at(s.at("label").get<std::string>()) == "human")
        CHECK(s.at("features") == kHuman);

    // different seeds eventually permute differently
    std::set<std::string> perms;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const auto b = svc.create_bundle(bundle_request(seed));
      perms.insert(svc.unblind(b.body.at("id").get<std::string>()).body.at("label_map").dump());
    }
    CHECK(perms.size() > 1);
    CHECK(svc.get_bundle("abc123").status == 404);
    CHECK(svc.unblind("../etc").status == 404);
  }

  TEST_CASE("study bundle: validation") {
    testsupport::TempDir dir;
    Service svc(fixture_engine(), dir.path());
    auto req = bundle_request(1);
    req["human_features"].erase(0);
    CHECK(svc.create_bundle(req).status == 400);
    req = bundle_request(1);
    req["generators"] = {"corpus"};
    CHECK(svc.create_bundle(req).status == 400);
    req = bundle_request(1);
    req["generators"] = {"corpus", "bogus"};
    CHECK(svc.create_bundle(req).status == 400);
    req = bundle_request(1);
    req.erase("seed");
    CHECK(svc.create_bundle(req).status == 400);

    // one fixture edge for dragon: too few for a set of five
    req = bundle_request(1);
    req["prompt"] = "A dragon.";
    const auto r = svc.create_bundle(req);
    CHECK(r.status == 422);
    CHECK(r.body.at("detail").at("generator") == "conceptnet");
  }

  TEST_CASE("make_study_bundle: permutation is a pure function of the seed") {
    const std::array<SourcedSet, 3> sets = {
        SourcedSet{"human", {"a", "b", "c", "d", "e"}},
        SourcedSet{"conceptnet", {"f", "g", "h", "i", "j"}},
        SourcedSet{"corpus", {"k", "l", "m", "n", "o"}}};
    const auto x = make_study_bundle("p", sets, 3);
    const auto y = make_study_bundle("p", sets, 3);
    CHECK(x.label_map == y.label_map);
    CHECK(x.id == y.id);
    auto bad = sets;
    bad[1].features.pop_back();
    CHECK_THROWS_AS(make_study_bundle("p", bad, 3), std::invalid_argument);
  }

  TEST_CASE("http: routes, json errors and static files") {
    testsupport::TempDir dir;
    testsupport::TempDir web;
    std::ofstream(web / "index.html") << "<!doctype html><title>ui</title>";
    Service svc(fixture_engine(), dir.path());
    testsupport::MockServer server;
    svc.mount(server.server, web.path());
    server.start();
    httplib::Client cli(server.url());

    auto res = cli.Post("/api/recommend", R"({"prompt":"build a tower","k":2})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("games").size() == 2);

    res = cli.Post("/api/recommend", "{nope", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body).at("code") == "invalid_json");

    res = cli.Post("/api/sessions", R"({"prompt":"p"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const auto id = json::parse(res->body).at("id").get<std::string>();
    res = cli.Post("/api/sessions/" + id + "/decide",
                   R"({"feature":{"text":"build a tower"},"verdict":"accepted"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    res = cli.Get("/api/sessions/" + id);
    REQUIRE(res);
    CHECK(json::parse(res->body).at("tally").at("accepted") == 1);

    res = cli.Post("/api/study/bundle", bundle_request(5).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const auto bid = json::parse(res->body).at("id").get<std::string>();
    res = cli.Get("/api/study/bundle/" + bid);
    REQUIRE(res);
    CHECK(res->body.find("human") == std::string::npos);
    res = cli.Get("/api/study/bundle/" + bid + "/unblind");
    REQUIRE(res);
    CHECK(res->body.find("human") != std::string::npos);

    res = cli.Post("/api/generate", R"({"prompt":"build a tower","generator":"bogus"})",
                   "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Get("/index.html");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("<title>ui</title>") != std::string::npos);
    res = cli.Get("/");
    REQUIRE(res);
    CHECK(res->status == 200);
  }
}
