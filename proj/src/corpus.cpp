#include "gamefeat/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "gamefeat/checksum.hpp"
#include "gamefeat/error.hpp"

namespace gamefeat {

using nlohmann::json;

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string string_field(const json& j, const char* key, bool required) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw FormatError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw FormatError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw FormatError(std::string("field '") + key + "' is not an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw FormatError(std::string("field '") + key + "' holds a non-string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string canonical_line(const GameRecord& r) { return to_json(r).dump(); }

}  // namespace

RawGameEntry parse_raw_entry(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  RawGameEntry e;
  e.id = string_field(j, "id", true);
  if (e.id.empty()) throw FormatError("empty id");
  e.title = string_field(j, "title", false);
  e.description = string_field(j, "description", false);
  e.tags = string_list(j, "tags");
  return e;
}

IngestResult build_records(std::istream& source, const TextPipeline& pipeline) {
  IngestResult result;
  auto& report = result.report;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (blank(line)) continue;
    RawGameEntry entry;
    try {
      entry = parse_raw_entry(line);
    } catch (const FormatError& e) {
      ++report.malformed;
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    if (!ids.insert(entry.id).second) {
      throw FormatError("duplicate game id '" + entry.id + "' at line " + std::to_string(line_no),
                        line_no);
    }
    ++report.read;
    if (blank(entry.description)) {
      ++report.dropped_empty;
      continue;
    }
    auto analysis = pipeline.analyze(entry.description);
    if (analysis.features.empty()) {
      ++report.dropped_no_features;
      continue;
    }
    GameRecord rec;
    rec.id = std::move(entry.id);
    rec.title = std::move(entry.title);
    rec.description = std::move(entry.description);
    for (auto& t : entry.tags) rec.tags.push_back(ascii_lower(t));
    rec.entities = std::move(analysis.entities);
    rec.features = std::move(analysis.features);
    result.records.push_back(std::move(rec));
    ++report.kept;
  }
  return result;
}

CorpusBuildReport ingest(std::istream& source, const TextPipeline& pipeline,
                         const std::filesystem::path& out) {
  auto result = build_records(source, pipeline);
  write_corpus(out, result.records);
  return std::move(result.report);
}

json to_json(const GameRecord& r) {
  json features = json::array();
  for (const auto& f : r.features) {
    features.push_back({{"verb", f.verb},
                        {"article", f.article ? json(*f.article) : json(nullptr)},
                        {"noun", f.noun},
                        {"raw", f.raw}});
  }
  return {{"id", r.id},         {"title", r.title},       {"description", r.description},
          {"tags", r.tags},     {"entities", r.entities}, {"features", features}};
}

GameRecord game_record_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  GameRecord r;
  r.id = string_field(j, "id", true);
  r.title = string_field(j, "title", false);
  r.description = string_field(j, "description", false);
  r.tags = string_list(j, "tags");
  r.entities = string_list(j, "entities");
  const auto it = j.find("features");
  if (it == j.end() || !it->is_array()) throw FormatError("missing 'features' array");
  for (const auto& f : *it) {
    if (!f.is_object()) throw FormatError("feature is not an object");
    FeaturePhrase p;
    p.verb = string_field(f, "verb", true);
    p.noun = string_field(f, "noun", true);
    p.raw = string_field(f, "raw", true);
    if (auto a = f.find("article"); a != f.end() && !a->is_null()) {
      if (!a->is_string() || !is_article(a->get<std::string>()))
        throw FormatError("invalid feature article");
      p.article = a->get<std::string>();
    }
    r.features.push_back(std::move(p));
  }
  if (r.features.empty()) throw FormatError("record '" + r.id + "' has no features");
  return r;
}

void write_corpus(const std::filesystem::path& path, std::span<const GameRecord> records) {
  Fnv1a64 h;
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    lines.push_back(canonical_line(r));
    h.update(lines.back());
    h.update("\n");
  }
  const json header = {{"format", "gamefeat-corpus"},
                       {"version", kCorpusFormatVersion},
                       {"records", records.size()},
                       {"checksum", h.hex()}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus: " + path.string());
  out << header.dump() << '\n';
  for (const auto& l : lines) out << l << '\n';
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

Corpus::Corpus(std::vector<GameRecord> records) : records_(std::move(records)) {
  Fnv1a64 h;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw FormatError("duplicate game id '" + records_[i].id + "'");
    }
    h.update(canonical_line(records_[i]));
    h.update("\n");
  }
  fingerprint_ = h.digest();
}

Corpus Corpus::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("corpus file is empty: " + path.string(), 1, 0);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error&) {
    throw FormatError("corpus header is not JSON", 1, 0);
  }
  if (!header.is_object() || header.value("format", "") != "gamefeat-corpus")
    throw FormatError("not a corpus file: " + path.string(), 1, 0);
  if (header.value("version", -1) != kCorpusFormatVersion) {
    throw FormatError("corpus format version " + header.value("version", json(-1)).dump() +
                          " is not supported (expected " + std::to_string(kCorpusFormatVersion) +
                          ")",
                      1, 0);
  }
  const auto expected_count = header.value("records", std::size_t{0});
  const auto expected_sum = header.value("checksum", std::string{});

  std::vector<GameRecord> records;
  records.reserve(expected_count);
  Fnv1a64 h;
  std::size_t line_no = 1;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto record_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      records.push_back(game_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError("corrupted corpus record at line " + std::to_string(line_no) +
                            " (byte offset " + std::to_string(record_offset) + "): " + e.what(),
                        line_no, record_offset);
    }
    h.update(line);
    h.update("\n");
  }
  if (records.size() != expected_count) {
    throw FormatError("corpus header declares " + std::to_string(expected_count) +
                      " records, file holds " + std::to_string(records.size()));
  }
  if (h.hex() != expected_sum) {
    throw FormatError("corpus checksum mismatch: header " + expected_sum + ", content " + h.hex());
  }
  return Corpus(std::move(records));
}

const GameRecord* Corpus::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

}  // namespace gamefeat
