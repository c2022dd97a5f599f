#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace gamefeat {

enum class GeneratorId { ConceptNet, Corpus, External };

std::string_view to_string(GeneratorId id);
std::optional<GeneratorId> parse_generator_id(std::string_view text);

enum class Relation { CapableOf, UsedFor };

std::string_view to_string(Relation r);
std::optional<Relation> parse_relation(std::string_view text);

struct SemanticEdge {
  std::string start;  // lowercase concept label
  Relation relation = Relation::CapableOf;
  std::string end;    // natural-language phrase
  double weight = 0;  // > 0

  friend bool operator==(const SemanticEdge&, const SemanticEdge&) = default;
};

/// Where a corpus-generator candidate came from. A rendered text can arise
/// from several games, so both lists may hold more than one entry.
struct CorpusOrigin {
  std::vector<std::string> retrieved_from;                           // game ids
  std::vector<std::pair<std::string, std::string>> recombined_from;  // (verb game, noun game)

  friend bool operator==(const CorpusOrigin&, const CorpusOrigin&) = default;
};

struct ExternalOrigin {
  std::string backend;

  friend bool operator==(const ExternalOrigin&, const ExternalOrigin&) = default;
};

using Provenance = std::variant<SemanticEdge, CorpusOrigin, ExternalOrigin>;

struct GeneratedFeature {
  std::string text;  // nonempty, single line, trimmed
  GeneratorId source = GeneratorId::Corpus;
  Provenance provenance;
  double score = 0;
};

nlohmann::json to_json(const SemanticEdge& edge);
nlohmann::json to_json(const GeneratedFeature& feature);

/// Trims ASCII whitespace from both ends.
std::string trim(std::string_view text);
bool has_control_chars(std::string_view text);

}  // namespace gamefeat
