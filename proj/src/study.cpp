#include "gamefeat/study.hpp"

#include <fstream>
#include <stdexcept>

#include "gamefeat/checksum.hpp"
#include "gamefeat/error.hpp"
#include "gamefeat/rng.hpp"

namespace gamefeat {

using nlohmann::json;

json StudyBundle::public_json() const {
  json out_sets = json::array();
  for (const auto& s : sets)
    out_sets.push_back({{"label", std::string(1, s.label)}, {"features", s.features}});
  return {{"id", id}, {"prompt", prompt}, {"sets", out_sets}};
}

json StudyBundle::label_map_json() const {
  json m = json::object();
  for (const auto& [label, source] : label_map) m[std::string(1, label)] = source;
  return m;
}

StudyBundle make_study_bundle(std::string prompt, std::array<SourcedSet, 3> sources,
                              std::uint64_t seed) {
  Fnv1a64 h;
  h.update(prompt);
  h.update("\x1f");
  h.update(std::to_string(seed));
  for (const auto& s : sources) {
    if (s.features.size() != kStudySetSize)
      throw std::invalid_argument("feature set from '" + s.source + "' has " +
                                  std::to_string(s.features.size()) + " features, expected 5");
    h.update("\x1e");
    h.update(s.source);
    for (const auto& f : s.features) {
      h.update("\x1f");
      h.update(f);
    }
  }

  StudyBundle b;
  b.id = h.hex();
  b.prompt = std::move(prompt);
  b.seed = seed;
  Rng rng(seed);
  rng.shuffle(std::span<SourcedSet>(sources));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const char label = static_cast<char>('A' + i);
    b.sets[i] = LabeledSet{label, std::move(sources[i].features)};
    b.label_map[label] = std::move(sources[i].source);
  }
  return b;
}

StudyStore::StudyStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void StudyStore::put(const StudyBundle& bundle) {
  const json doc = {{"bundle", bundle.public_json()},
                    {"seed", bundle.seed},
                    {"label_map", bundle.label_map_json()}};
  const auto tmp = dir_ / (bundle.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write bundle " + tmp.string());
    out << doc.dump() << '\n';
  }
  std::filesystem::rename(tmp, dir_ / (bundle.id + ".json"));
}

std::optional<StudyBundle> StudyStore::get(const std::string& id) const {
  if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos)
    return std::nullopt;
  std::ifstream in(dir_ / (id + ".json"));
  if (!in) return std::nullopt;
  const auto doc = json::parse(in);
  StudyBundle b;
  const auto& pub = doc.at("bundle");
  b.id = pub.at("id").get<std::string>();
  b.prompt = pub.at("prompt").get<std::string>();
  b.seed = doc.value("seed", std::uint64_t{0});
  const auto& sets = pub.at("sets");
  for (std::size_t i = 0; i < b.sets.size() && i < sets.size(); ++i) {
    b.sets[i].label = sets[i].at("label").get<std::string>().at(0);
    b.sets[i].features = sets[i].at("features").get<std::vector<std::string>>();
  }
  for (const auto& [label, source] : doc.at("label_map").items())
    b.label_map[label.at(0)] = source.get<std::string>();
  return b;
}

}  // namespace gamefeat
