#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "detox/scoring.hpp"

namespace detox {

struct Document {
  std::string id;
  std::string text;
};

struct ScoredDocument {
  Document document;
  AttributeScores scores;
};

enum class PartitionKind { kNontoxicLe, kToxicGe };

// A percentile-bounded slice of a scored corpus: nontoxic_le keeps documents
// whose toxicity is <= the p-th percentile value, toxic_ge keeps those >= it.
struct PartitionSpec {
  PartitionKind kind = PartitionKind::kNontoxicLe;
  int percentile = 0;  // in [0,100]

  void validate() const;         // throws std::invalid_argument
  std::string label() const;     // "le5", "ge98", ...
  bool keeps(double score, double boundary) const;

  // Parses "le:5" or "ge:98".
  static PartitionSpec parse(const std::string& text);
};

struct CorpusStats {
  std::uint64_t doc_count = 0;
  double avg_toxicity = 0.0;
  std::uint64_t total_bytes = 0;  // UTF-8 text bytes
};

// Streaming JSONL -> Document reader. Each non-blank line must be a JSON
// object with "id" and "text". In strict mode (default) a malformed line
// raises an error naming the line; in lenient mode it is skipped and counted.
class JsonlDocumentReader {
 public:
  explicit JsonlDocumentReader(bool strict = true) : strict_(strict) {}

  // Calls fn once per document, in input order.
  void read(std::istream& in, const std::function<void(Document&&)>& fn);

  std::uint64_t skipped() const { return skipped_; }

 private:
  bool strict_;
  std::uint64_t skipped_ = 0;
};

std::vector<Document> read_documents(std::istream& in, bool strict = true);
std::vector<Document> read_documents_file(const std::filesystem::path& path,
                                          bool strict = true);
void write_documents_file(const std::filesystem::path& path,
                          const std::vector<Document>& docs);

// Keeps each document independently with probability `fraction`; one RNG
// draw per document, so identical (fraction, seed, input order) give an
// identical sample.
class FractionSampler {
 public:
  FractionSampler(double fraction, std::uint64_t seed);
  bool keep();

 private:
  double fraction_;
  std::mt19937_64 rng_;
};

// Value of the nearest-rank percentile: the max(1, ceil(p/100 * n))-th
// smallest score.
double nearest_rank_percentile(std::vector<double> scores, int percentile);

std::vector<Document> partition_by_percentile(
    const std::vector<ScoredDocument>& scored, const PartitionSpec& spec);

CorpusStats corpus_stats(const std::vector<ScoredDocument>& scored);

// First `max_chars` code points of UTF-8 text (whole code points only).
std::string utf8_prefix(const std::string& text, std::size_t max_chars);

// --- Streaming partition pipeline -----------------------------------------
//
// Two passes over the input file so only an (id, toxicity) index is held in
// memory: pass 1 samples + scores documents (truncated to truncate_chars for
// scoring) in parallel chunks; pass 2 re-streams the file with the same
// sampler seed and appends each kept document to every matching partition.

struct ScoreIndexEntry {
  std::string id;
  double toxicity = 0.0;
};

struct PartitionOptions {
  std::filesystem::path input_path;
  std::vector<PartitionSpec> specs;
  std::filesystem::path out_dir;
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  int workers = 0;  // <= 0 means default_worker_count()
  std::size_t truncate_chars = 2000;
  bool strict = true;

  void validate() const;
};

struct PartitionResult {
  struct PartitionInfo {
    CorpusStats stats;
    double boundary = 0.0;  // percentile value defining the slice
    std::filesystem::path path;
  };
  CorpusStats overall;                          // sampled corpus
  std::map<std::string, PartitionInfo> parts;   // label -> info
  std::uint64_t input_docs = 0;                 // before sampling
  std::uint64_t sampled_docs = 0;
  std::uint64_t skipped_lines = 0;              // lenient mode only
  std::filesystem::path index_path;
  std::filesystem::path stats_path;
};

PartitionResult run_partition(const PartitionOptions& options, Scorer& scorer);

void write_score_index(const std::filesystem::path& path,
                       const std::vector<ScoreIndexEntry>& index);
std::vector<ScoreIndexEntry> read_score_index(
    const std::filesystem::path& path);

// Applies fn to the tokenized text of every document in a JSONL corpus file.
void for_each_document_tokens(
    const std::filesystem::path& path,
    const std::function<void(const std::vector<std::string>&)>& fn);

}  // namespace detox
