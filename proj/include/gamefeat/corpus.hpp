#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamefeat/textproc.hpp"

namespace gamefeat {

/// One line of the ingestion stream.
struct RawGameEntry {
  std::string id;
  std::string title;
  std::string description;
  std::vector<std::string> tags;
};

struct GameRecord {
  std::string id;
  std::string title;
  std::string description;
  std::vector<std::string> tags;      // lowercase
  std::vector<std::string> entities;  // lowercase, deduplicated, first occurrence
  std::vector<FeaturePhrase> features;

  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

struct CorpusBuildReport {
  std::size_t read = 0;  // records that parsed; read = kept + dropped_*
  std::size_t kept = 0;
  std::size_t dropped_no_features = 0;
  std::size_t dropped_empty = 0;
  std::size_t malformed = 0;  // lines skipped before they could be read
  std::vector<std::string> diagnostics;
};

/// Parses one JSON line. Throws FormatError on a bad record.
RawGameEntry parse_raw_entry(std::string_view line);

struct IngestResult {
  CorpusBuildReport report;
  std::vector<GameRecord> records;
};

/// Runs text processing over every entry and keeps the ones with at least one
/// feature phrase. Malformed lines are skipped with a diagnostic; a repeated
/// id throws FormatError naming it.
IngestResult build_records(std::istream& source, const TextPipeline& pipeline);

/// build_records + write_corpus.
CorpusBuildReport ingest(std::istream& source, const TextPipeline& pipeline,
                         const std::filesystem::path& out);

nlohmann::json to_json(const GameRecord& record);
GameRecord game_record_from_json(const nlohmann::json& j);

inline constexpr int kCorpusFormatVersion = 1;

/// Header line, then one canonical JSON record per line.
void write_corpus(const std::filesystem::path& path, std::span<const GameRecord> records);

/// Immutable set of records with an id index. Safe to share across threads.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<GameRecord> records);

  /// Throws FormatError (version, count, checksum, bad record with line and
  /// byte offset) or Error (missing file).
  static Corpus load(const std::filesystem::path& path);

  std::span<const GameRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const GameRecord& operator[](std::size_t i) const { return records_[i]; }

  const GameRecord* find(std::string_view id) const;

  /// FNV-1a over the canonical record lines; matches the file header.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<GameRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::uint64_t fingerprint_ = 0;
};

}  // namespace gamefeat
