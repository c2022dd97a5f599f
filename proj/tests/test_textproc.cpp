#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "gamefeat/error.hpp"
#include "gamefeat/textproc.hpp"
#include "support.hpp"

using namespace gamefeat;
using testsupport::shipped_tagger;

namespace {

std::vector<PosTag> tags_of(std::string_view text, const Tagger& tagger = shipped_tagger()) {
  std::vector<PosTag> out;
  for (const auto& t : tag(tokenize(text), tagger)) out.push_back(t.tag);
  return out;
}

LexiconTagger tiny_tagger() {
  std::istringstream in(
      "# test lexicon\n"
      "a\tARTICLE\nthe\tARTICLE\nan\tARTICLE\n"
      "build\tVERB\nbuild\tNOUN\n"
      "attack\tVERB\nattack\tNOUN\n"
      "tower\tNOUN\ntower\tVERB\n"
      "enemy\tNOUN\n"
      "red\tADJ\n"
      "run\tVERB\n"
      "to\tOTHER\nyou\tOTHER\nmy\tOTHER\n");
  return LexiconTagger::from_stream(in);
}

}  // namespace

TEST_SUITE("textproc") {
  TEST_CASE("tokenize: empty and whitespace") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t\n ").empty());
  }

  TEST_CASE("tokenize: spans of a plain phrase") {
    const auto t = tokenize("build a tower");
    REQUIRE(t.size() == 3);
    CHECK(t[0] == Token{"build", {0, 5}});
    CHECK(t[1] == Token{"a", {6, 7}});
    CHECK(t[2] == Token{"tower", {8, 13}});
  }

  TEST_CASE("tokenize: hyphens stay inside, edge punctuation peels off") {
    // hand-applied: whitespace split gives "capture-the-flag," "death" "match";
    // the trailing comma is peeled, interior hyphens kept.
    const auto t = tokenize("capture-the-flag, death match");
    REQUIRE(t.size() == 4);
    CHECK(t[0] == Token{"capture-the-flag", {0, 16}});
    CHECK(t[1] == Token{",", {16, 17}});
    CHECK(t[2] == Token{"death", {18, 23}});
    CHECK(t[3] == Token{"match", {24, 29}});
  }

  TEST_CASE("tokenize: several leading and trailing marks") {
    const auto t = tokenize("(\"wow!\")");
    std::vector<std::string> texts;
    for (const auto& x : t) texts.push_back(x.text);
    CHECK(texts == std::vector<std::string>{"(", "\"", "wow", "!", "\"", ")"});
  }

  TEST_CASE("tokenize: property, spans reconstruct the input") {
    std::mt19937_64 rng(7);
    const std::string alphabet = "ab -,.!'\t\n";
    for (int trial = 0; trial < 300; ++trial) {
      std::string s;
      const auto len = rng() % 40;
      for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
      const auto toks = tokenize(s);
      std::size_t pos = 0;
      std::string rebuilt;
      for (const auto& t : toks) {
        REQUIRE(t.span.begin >= pos);
        for (auto i = pos; i < t.span.begin; ++i) CHECK(std::isspace(static_cast<unsigned char>(s[i])));
        CHECK(s.substr(t.span.begin, t.span.end - t.span.begin) == t.text);
        CHECK(t.text.find_first_of(" \t\n") == std::string::npos);
        CHECK(!t.text.empty());
        pos = t.span.end;
      }
      for (auto i = pos; i < s.size(); ++i) CHECK(std::isspace(static_cast<unsigned char>(s[i])));
    }
  }

  TEST_CASE("tag: closed class and the build/tower example") {
    CHECK(tags_of("a") == std::vector<PosTag>{PosTag::Article});
    CHECK(tags_of("build a tower") ==
          std::vector<PosTag>{PosTag::Verb, PosTag::Article, PosTag::Noun});
  }

  TEST_CASE("tag: attack after an article vs sentence-initial") {
    // rule 1: article before a VERB-default word with a noun reading -> NOUN
    CHECK(tags_of("the attack")[1] == PosTag::Noun);
    // rule 3: sentence-initial word with a verb reading -> VERB
    CHECK(tags_of("attack tower")[0] == PosTag::Verb);
    CHECK(tags_of("attack tower")[1] == PosTag::Noun);
  }

  TEST_CASE("tag: contextual rules on a tiny lexicon") {
    const auto t = tiny_tagger();
    // default readings
    CHECK(tags_of("enemy tower", t) == std::vector<PosTag>{PosTag::Noun, PosTag::Noun});
    // rule 2: after "to"/"you" a word with a verb reading becomes VERB
    CHECK(tags_of("enemy to tower", t)[2] == PosTag::Verb);
    CHECK(tags_of("enemy you tower", t)[2] == PosTag::Verb);
    // rule 1 covers possessives and adjectives too
    CHECK(tags_of("enemy my build", t)[2] == PosTag::Noun);
    CHECK(tags_of("enemy red attack", t)[2] == PosTag::Noun);
    // rule 1 fallback: a verb-only word after an article becomes NOUN
    CHECK(tags_of("enemy the run", t)[2] == PosTag::Noun);
    // rule 3 after sentence punctuation
    CHECK(tags_of("enemy. tower", t)[2] == PosTag::Verb);
    // case folds before lookup
    CHECK(tags_of("The Attack", t) == std::vector<PosTag>{PosTag::Article, PosTag::Noun});
  }

  TEST_CASE("tag: articles only for a/an/the, punctuation is OTHER") {
    for (const auto& t : tag(tokenize("a an the this, 42 !"), shipped_tagger())) {
      if (t.tag == PosTag::Article) CHECK(is_article(t.norm));
    }
    CHECK(tags_of("42 !") == std::vector<PosTag>{PosTag::Other, PosTag::Other});
  }

  TEST_CASE("tag: suffix guesses for unknown words") {
    CHECK(LexiconTagger::guess_unknown("zorbifying") == PosTag::Verb);
    CHECK(LexiconTagger::guess_unknown("zorbize") == PosTag::Verb);
    CHECK(LexiconTagger::guess_unknown("zorbation") == PosTag::Noun);
    CHECK(LexiconTagger::guess_unknown("zorbness") == PosTag::Noun);
    CHECK(LexiconTagger::guess_unknown("zorber") == PosTag::Noun);
    CHECK(LexiconTagger::guess_unknown("zorbous") == PosTag::Adj);
    CHECK(LexiconTagger::guess_unknown("zorbly") == PosTag::Other);
    CHECK(LexiconTagger::guess_unknown("zorb") == PosTag::Noun);
    CHECK(LexiconTagger::guess_unknown("zorb-shaped") == PosTag::Adj);
  }

  TEST_CASE("tag: deterministic") {
    const std::string s = "an RPG about a princess who collects swords and flowers";
    CHECK(tag(tokenize(s), shipped_tagger()) == tag(tokenize(s), shipped_tagger()));
  }

  TEST_CASE("lexicon: malformed files fail at construction") {
    std::istringstream bad_tag("build\tVERBISH\n");
    CHECK_THROWS_AS(LexiconTagger::from_stream(bad_tag), FormatError);
    std::istringstream no_tab("build VERB\n");
    CHECK_THROWS_AS(LexiconTagger::from_stream(no_tab), FormatError);
    std::istringstream bad_article("zap\tARTICLE\n");
    CHECK_THROWS_AS(LexiconTagger::from_stream(bad_article), FormatError);
    CHECK_THROWS_AS(LexiconTagger::from_file("/nonexistent/lexicon.tsv"), Error);
  }

  TEST_CASE("lexicon: shipped file size") {
    CHECK(shipped_tagger().size() >= 5000);
  }

  TEST_CASE("entities: dedup, order, lowercase") {
    CHECK(extract_entities({}).empty());
    const std::string s = "attack the enemy tower, defend the tower";
    const auto e = extract_entities(tag(tokenize(s), shipped_tagger()));
    CHECK(e == std::vector<std::string>{"enemy", "tower"});
  }

  TEST_CASE("entities: princess prompt golden list") {
    const std::string s =
        "an RPG about a princess who collects swords and flowers to turn into potions and is "
        "secretly a frog";
    const auto e = extract_entities(tag(tokenize(s), shipped_tagger()));
    CHECK(e == std::vector<std::string>{"rpg", "princess", "swords", "flowers", "potions", "frog"});
  }

  TEST_CASE("features: the three documented examples") {
    TextPipeline p(shipped_tagger());
    auto f = p.analyze("build a tower").features;
    REQUIRE(f.size() == 1);
    CHECK(f[0] == FeaturePhrase{"build", "a", "tower", "build a tower"});

    f = p.analyze("jump platform").features;
    REQUIRE(f.size() == 1);
    CHECK(f[0] == FeaturePhrase{"jump", std::nullopt, "platform", "jump platform"});

    f = p.analyze("build a tower attack the enemy").features;
    REQUIRE(f.size() == 2);
    CHECK(f[0].render() == "build a tower");
    CHECK(f[1].render() == "attack the enemy");
  }

  TEST_CASE("features: matcher on hand-made tag streams") {
    auto tt = [](std::string text, PosTag t, std::size_t b) {
      return TaggedToken{text, ascii_lower(text), t, {b, b + text.size()}};
    };
    using enum PosTag;
    // VERB VERB NOUN: the second verb starts the match
    const std::string s1 = "go run home";
    const std::vector<TaggedToken> t1 = {tt("go", Verb, 0), tt("run", Verb, 3), tt("home", Noun, 7)};
    auto f = extract_features(t1, s1);
    REQUIRE(f.size() == 1);
    CHECK(f[0].raw == "run home");

    // VERB ARTICLE ARTICLE NOUN: no match
    const std::string s2 = "hit a the ball";
    const std::vector<TaggedToken> t2 = {tt("hit", Verb, 0), tt("a", Article, 4),
                                         tt("the", Article, 6), tt("ball", Noun, 10)};
    CHECK(extract_features(t2, s2).empty());

    // VERB NOUN NOUN: the match consumes only the first noun
    const std::string s3 = "hit ball bat";
    const std::vector<TaggedToken> t3 = {tt("hit", Verb, 0), tt("ball", Noun, 4),
                                         tt("bat", Noun, 9)};
    f = extract_features(t3, s3);
    REQUIRE(f.size() == 1);
    CHECK(f[0].noun == "ball");

    // trailing VERB ARTICLE at end of stream
    const std::string s4 = "hit a";
    const std::vector<TaggedToken> t4 = {tt("hit", Verb, 0), tt("a", Article, 4)};
    CHECK(extract_features(t4, s4).empty());
  }

  TEST_CASE("features: soundness and containment property") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> words = {"build", "a",     "tower", "the",   "attack", "enemy",
                                            "red",   "gather", "stone", ",",    "quickly", "an",
                                            "orchard", "to",  "fly",   "planes", "."};
    TextPipeline p(shipped_tagger());
    for (int trial = 0; trial < 500; ++trial) {
      std::string s;
      const auto n = rng() % 12;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) s += (rng() % 4 == 0) ? "  " : " ";
        s += words[rng() % words.size()];
      }
      const auto a = p.analyze(s);
      std::size_t last_end = 0;
      for (const auto& f : a.features) {
        // find the token window this phrase came from
        std::size_t i = 0;
        while (i < a.tokens.size() && a.tokens[i].span.begin < last_end) ++i;
        while (i < a.tokens.size() &&
               (a.tokens[i].tag != PosTag::Verb ||
                s.compare(a.tokens[i].span.begin, f.raw.size(), f.raw) != 0))
          ++i;
        REQUIRE(i < a.tokens.size());
        CHECK(a.tokens[i].tag == PosTag::Verb);
        std::size_t j = i + 1;
        if (f.article) {
          CHECK(a.tokens[j].tag == PosTag::Article);
          CHECK(a.tokens[j].norm == *f.article);
          ++j;
        }
        CHECK(a.tokens[j].tag == PosTag::Noun);
        CHECK(a.tokens[j].norm == f.noun);
        CHECK(f.raw == s.substr(a.tokens[i].span.begin, a.tokens[j].span.end - a.tokens[i].span.begin));
        CHECK(std::find(a.entities.begin(), a.entities.end(), f.noun) != a.entities.end());
        last_end = a.tokens[j].span.end;
      }
    }
  }

  TEST_CASE("features: grammar fixture file") {
    TextPipeline p(shipped_tagger());
    std::ifstream in(testsupport::fixture("grammar25.ndjson"));
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      const auto text = j["text"].get<std::string>();
      std::vector<FeaturePhrase> expected;
      for (const auto& e : j["expected"]) {
        FeaturePhrase f{e["verb"], std::nullopt, e["noun"], e["raw"]};
        if (!e["article"].is_null()) f.article = e["article"].get<std::string>();
        expected.push_back(f);
      }
      CAPTURE(text);
      CHECK(p.analyze(text).features == expected);
      ++n;
    }
    CHECK(n == 25);
  }
}
