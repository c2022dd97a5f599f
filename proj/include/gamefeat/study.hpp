#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gamefeat {

inline constexpr std::size_t kStudySetSize = 5;

struct LabeledSet {
  char label = 'A';
  std::vector<std::string> features;
};

/// Three five-feature sets under a seeded random A/B/C labeling. The
/// label -> source map is kept apart from the public projection.
struct StudyBundle {
  std::string id;
  std::string prompt;
  std::uint64_t seed = 0;
  std::array<LabeledSet, 3> sets;       // ordered A, B, C
  std::map<char, std::string> label_map;  // hidden

  /// {id, prompt, sets:[{label, features}]}; no source names.
  nlohmann::json public_json() const;
  nlohmann::json label_map_json() const;
};

struct SourcedSet {
  std::string source;  // "human" or a generator id
  std::vector<std::string> features;
};

/// Throws std::invalid_argument unless every set holds exactly five features.
StudyBundle make_study_bundle(std::string prompt, std::array<SourcedSet, 3> sources,
                              std::uint64_t seed);

/// bundles/<id>.json holding the public bundle plus its label map.
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path dir);

  void put(const StudyBundle& bundle);
  std::optional<StudyBundle> get(const std::string& id) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace gamefeat
