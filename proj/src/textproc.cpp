#include "gamefeat/textproc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "gamefeat/error.hpp"

namespace gamefeat {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// ASCII punctuation only; UTF-8 continuation bytes count as word characters.
bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

bool has_letter(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalpha(u);
  });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool contains(const LexiconTagger::Readings& r, PosTag t) {
  return std::find(r.begin(), r.end(), t) != r.end();
}

const std::unordered_set<std::string_view> kPossessives = {"my", "your", "his", "her",
                                                           "its", "our", "their"};
const std::unordered_set<std::string_view> kVerbCues = {
    "to",  "i",     "you",   "we",    "they",   "he",  "she",  "who", "can", "could",
    "will", "would", "shall", "should", "may", "might", "must"};
const std::unordered_set<std::string_view> kSentenceEnds = {".", "!", "?", ";", ":"};

}  // namespace

std::string_view to_string(PosTag tag) {
  switch (tag) {
    case PosTag::Verb: return "VERB";
    case PosTag::Noun: return "NOUN";
    case PosTag::Article: return "ARTICLE";
    case PosTag::Adj: return "ADJ";
    case PosTag::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<PosTag> parse_pos_tag(std::string_view text) {
  static constexpr std::array<PosTag, 5> all = {PosTag::Verb, PosTag::Noun, PosTag::Article,
                                                PosTag::Adj, PosTag::Other};
  for (auto t : all) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string FeaturePhrase::render() const {
  std::string out = verb;
  if (article) {
    out += ' ';
    out += *article;
  }
  out += ' ';
  out += noun;
  return out;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_article(std::string_view norm) { return norm == "a" || norm == "an" || norm == "the"; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  auto emit = [&](std::size_t b, std::size_t e) {
    tokens.push_back(Token{std::string(text.substr(b, e - b)), Span{b, e}});
  };

  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !is_space(text[end])) ++end;

    std::size_t lo = i;
    std::size_t hi = end;
    while (lo < hi && is_punct(text[lo])) {
      emit(lo, lo + 1);
      ++lo;
    }
    std::size_t trail = hi;
    while (trail > lo && is_punct(text[trail - 1])) --trail;
    if (lo < trail) emit(lo, trail);
    for (std::size_t p = trail; p < hi; ++p) emit(p, p + 1);
    i = end;
  }
  return tokens;
}

LexiconTagger::LexiconTagger(std::unordered_map<std::string, Readings> lexicon)
    : lexicon_(std::move(lexicon)) {
  for (const auto& [word, readings] : lexicon_) {
    if (readings.empty()) throw FormatError("lexicon word without readings: " + word);
    if (contains(readings, PosTag::Article) && !is_article(word)) {
      throw FormatError("ARTICLE reading is reserved for a/an/the, got: " + word);
    }
  }
}

LexiconTagger LexiconTagger::from_stream(std::istream& in) {
  std::unordered_map<std::string, Readings> lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("lexicon line " + std::to_string(line_no) + ": expected word<TAB>TAG",
                        line_no);
    }
    const auto tag = parse_pos_tag(std::string_view(line).substr(tab + 1));
    if (!tag) {
      throw FormatError("lexicon line " + std::to_string(line_no) + ": unknown tag '" +
                            line.substr(tab + 1) + "'",
                        line_no);
    }
    auto& readings = lexicon[ascii_lower(std::string_view(line).substr(0, tab))];
    if (!contains(readings, *tag)) readings.push_back(*tag);
  }
  return LexiconTagger(std::move(lexicon));
}

LexiconTagger LexiconTagger::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon: " + path.string());
  return from_stream(in);
}

PosTag LexiconTagger::guess_unknown(std::string_view w) {
  if (!has_letter(w)) return PosTag::Other;
  if (is_article(w)) return PosTag::Article;
  const bool hyphenated = w.find('-') != std::string_view::npos;
  if (hyphenated && ends_with(w, "ed")) return PosTag::Adj;
  for (auto s : {"ing", "ize", "ise", "ify", "ed"}) {
    if (ends_with(w, s)) return PosTag::Verb;
  }
  for (auto s : {"tion", "sion", "ness", "ment", "ity", "ist", "ism", "er", "or"}) {
    if (ends_with(w, s)) return PosTag::Noun;
  }
  for (auto s : {"ous", "ful", "ive", "able", "ible", "less", "ic", "al"}) {
    if (ends_with(w, s)) return PosTag::Adj;
  }
  if (ends_with(w, "ly")) return PosTag::Other;
  return PosTag::Noun;
}

LexiconTagger::Readings LexiconTagger::readings(std::string_view norm) const {
  if (is_article(norm)) return {PosTag::Article};
  if (auto it = lexicon_.find(std::string(norm)); it != lexicon_.end()) return it->second;
  return {guess_unknown(norm)};
}

std::vector<TaggedToken> LexiconTagger::tag(std::span<const Token> tokens) const {
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TaggedToken tt{tokens[i].text, ascii_lower(tokens[i].text), PosTag::Other, tokens[i].span};
    if (!has_letter(tt.norm)) {
      out.push_back(std::move(tt));
      continue;
    }
    const auto r = readings(tt.norm);
    PosTag t = r.front();

    if (t != PosTag::Article) {
      const TaggedToken* prev = i > 0 ? &out.back() : nullptr;
      if (prev && (prev->tag == PosTag::Article || prev->tag == PosTag::Adj ||
                   kPossessives.contains(prev->norm))) {
        if (t == PosTag::Verb) {
          if (contains(r, PosTag::Noun))
            t = PosTag::Noun;
          else if (contains(r, PosTag::Adj))
            t = PosTag::Adj;
          else
            t = PosTag::Noun;
        }
      } else if (prev && kVerbCues.contains(prev->norm)) {
        if (contains(r, PosTag::Verb)) t = PosTag::Verb;
      } else if (!prev || kSentenceEnds.contains(prev->norm)) {
        if (contains(r, PosTag::Verb)) t = PosTag::Verb;
      }
    }
    tt.tag = t;
    out.push_back(std::move(tt));
  }
  return out;
}

std::vector<TaggedToken> tag(std::span<const Token> tokens, const Tagger& tagger) {
  return tagger.tag(tokens);
}

std::vector<std::string> extract_entities(std::span<const TaggedToken> tagged) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tagged) {
    if (t.tag == PosTag::Noun && seen.insert(t.norm).second) out.push_back(t.norm);
  }
  return out;
}

std::vector<FeaturePhrase> extract_features(std::span<const TaggedToken> tagged,
                                            std::string_view source_text) {
  std::vector<FeaturePhrase> out;
  const auto n = tagged.size();
  auto make = [&](std::size_t first, std::size_t last, bool with_article) {
    FeaturePhrase p;
    p.verb = tagged[first].norm;
    if (with_article) p.article = tagged[first + 1].norm;
    p.noun = tagged[last].norm;
    const auto b = tagged[first].span.begin;
    p.raw = std::string(source_text.substr(b, tagged[last].span.end - b));
    out.push_back(std::move(p));
  };

  std::size_t i = 0;
  while (i < n) {
    if (tagged[i].tag == PosTag::Verb) {
      if (i + 1 < n && tagged[i + 1].tag == PosTag::Noun) {
        make(i, i + 1, false);
        i += 2;
        continue;
      }
      if (i + 2 < n && tagged[i + 1].tag == PosTag::Article && tagged[i + 2].tag == PosTag::Noun) {
        make(i, i + 2, true);
        i += 3;
        continue;
      }
    }
    ++i;
  }
  return out;
}

TextAnalysis TextPipeline::analyze(std::string_view text) const {
  TextAnalysis a;
  const auto tokens = tokenize(text);
  a.tokens = tagger_->tag(tokens);
  a.entities = extract_entities(a.tokens);
  a.features = extract_features(a.tokens, text);
  return a;
}

}  // namespace gamefeat
