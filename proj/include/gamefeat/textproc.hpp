#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gamefeat {

enum class PosTag { Verb, Noun, Article, Adj, Other };

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view text);

/// Half-open byte range into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  std::string text;
  Span span;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TaggedToken {
  std::string text;
  std::string norm;
  PosTag tag = PosTag::Other;
  Span span;

  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

/// A `VERB (ARTICLE)? NOUN` match. Parts are lowercase; `raw` is the exact
/// source substring from the verb's first byte to the noun's last.
struct FeaturePhrase {
  std::string verb;
  std::optional<std::string> article;
  std::string noun;
  std::string raw;

  /// "verb [article] noun", single spaces, lowercase.
  std::string render() const;

  friend bool operator==(const FeaturePhrase&, const FeaturePhrase&) = default;
};

std::string ascii_lower(std::string_view text);
bool is_article(std::string_view norm);

/// Splits on whitespace, then peels leading and trailing ASCII punctuation
/// off each chunk into one-character tokens. Interior punctuation (hyphens,
/// apostrophes) stays inside the word.
std::vector<Token> tokenize(std::string_view text);

/// Tagger contract: exactly one tag per token, deterministic.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<TaggedToken> tag(std::span<const Token> tokens) const = 0;
};

/// Lexicon lookup + suffix guesses for unknown words + an ordered table of
/// contextual overrides.
///
/// The lexicon maps a word to its readings, most likely first. A word listed
/// on several lines has several readings; the first is the default tag and
/// the others are what the contextual rules may switch to:
///
///   1. previous token is an article, a possessive determiner or ADJ:
///      VERB becomes NOUN (or ADJ when the word has no noun reading)
///   2. previous token is "to", a subject pronoun, "who" or a modal:
///      becomes VERB if the word has a verb reading
///   3. sentence-initial (first token or after . ! ? ; :):
///      becomes VERB if the word has a verb reading
///
/// Tokens without a letter are OTHER. Only a/an/the are ever ARTICLE.
class LexiconTagger final : public Tagger {
 public:
  using Readings = std::vector<PosTag>;

  explicit LexiconTagger(std::unordered_map<std::string, Readings> lexicon);

  /// `word<TAB>TAG` lines, `#` comments. Throws FormatError.
  static LexiconTagger from_stream(std::istream& in);
  static LexiconTagger from_file(const std::filesystem::path& path);

  std::vector<TaggedToken> tag(std::span<const Token> tokens) const override;

  /// Readings for a lowercase word; unknown words get one suffix-guessed reading.
  Readings readings(std::string_view norm) const;
  std::size_t size() const { return lexicon_.size(); }

  static PosTag guess_unknown(std::string_view norm);

 private:
  std::unordered_map<std::string, Readings> lexicon_;
};

/// Tags, pulling the lowercase form from the token text.
std::vector<TaggedToken> tag(std::span<const Token> tokens, const Tagger& tagger);

/// NOUN norms in first-occurrence order, deduplicated.
std::vector<std::string> extract_entities(std::span<const TaggedToken> tagged);

/// Greedy left-to-right, non-overlapping matches of VERB (ARTICLE)? NOUN over
/// adjacent tokens.
std::vector<FeaturePhrase> extract_features(std::span<const TaggedToken> tagged,
                                            std::string_view source_text);

struct TextAnalysis {
  std::vector<TaggedToken> tokens;
  std::vector<std::string> entities;
  std::vector<FeaturePhrase> features;
};

/// tokenize -> tag -> entities/features. Holds a non-owning tagger reference.
class TextPipeline {
 public:
  /// Borrows `tagger`; it must outlive the pipeline.
  explicit TextPipeline(const Tagger& tagger) : tagger_(&tagger) {}
  explicit TextPipeline(Tagger&&) = delete;

  TextAnalysis analyze(std::string_view text) const;
  const Tagger& tagger() const { return *tagger_; }

 private:
  const Tagger* tagger_;
};

}  // namespace gamefeat
