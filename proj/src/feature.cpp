#include "gamefeat/feature.hpp"

namespace gamefeat {

using nlohmann::json;

std::string_view to_string(GeneratorId id) {
  switch (id) {
    case GeneratorId::ConceptNet: return "conceptnet";
    case GeneratorId::Corpus: return "corpus";
    case GeneratorId::External: return "external";
  }
  return "corpus";
}

std::optional<GeneratorId> parse_generator_id(std::string_view text) {
  if (text == "conceptnet") return GeneratorId::ConceptNet;
  if (text == "corpus") return GeneratorId::Corpus;
  if (text == "external") return GeneratorId::External;
  return std::nullopt;
}

std::string_view to_string(Relation r) {
  return r == Relation::CapableOf ? "CapableOf" : "UsedFor";
}

std::optional<Relation> parse_relation(std::string_view text) {
  if (text.starts_with("/r/")) text.remove_prefix(3);
  if (text == "CapableOf") return Relation::CapableOf;
  if (text == "UsedFor") return Relation::UsedFor;
  return std::nullopt;
}

json to_json(const SemanticEdge& e) {
  return {{"start", e.start},
          {"relation", std::string(to_string(e.relation))},
          {"end", e.end},
          {"weight", e.weight}};
}

json to_json(const GeneratedFeature& f) {
  json provenance = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SemanticEdge>) {
          return {{"edge", to_json(p)}};
        } else if constexpr (std::is_same_v<T, CorpusOrigin>) {
          json pairs = json::array();
          for (const auto& [verb_game, noun_game] : p.recombined_from)
            pairs.push_back({{"verb_game", verb_game}, {"noun_game", noun_game}});
          return {{"retrieved_from", p.retrieved_from}, {"recombined_from", pairs}};
        } else {
          return {{"backend", p.backend}};
        }
      },
      f.provenance);
  return {{"text", f.text},
          {"source", std::string(to_string(f.source))},
          {"provenance", provenance},
          {"score", f.score}};
}

std::string trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = text.find_last_not_of(ws);
  return std::string(text.substr(b, e - b + 1));
}

bool has_control_chars(std::string_view text) {
  for (unsigned char c : text) {
    if (c < 0x20 || c == 0x7f) return true;
  }
  return false;
}

}  // namespace gamefeat
