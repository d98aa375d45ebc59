#include "detox/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "detox/jsonl.hpp"
#include "detox/log.hpp"
#include "detox/parallel.hpp"
#include "detox/tokens.hpp"
#include "nlohmann/json.hpp"

namespace detox {

namespace {

nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json record;
  record["id"] = doc.id;
  record["text"] = doc.text;
  return record;
}

// Nearest-rank value over an already sorted, non-empty score list.
double nearest_rank_sorted(const std::vector<double>& sorted, int percentile) {
  const std::uint64_t n = sorted.size();
  const std::uint64_t p = static_cast<std::uint64_t>(percentile);
  const std::uint64_t rank = std::max<std::uint64_t>(1, (p * n + 99) / 100);
  return sorted[rank - 1];
}

nlohmann::ordered_json stats_to_json(const CorpusStats& stats) {
  nlohmann::ordered_json out;
  out["doc_count"] = stats.doc_count;
  out["avg_toxicity"] = stats.avg_toxicity;
  out["total_bytes"] = stats.total_bytes;
  return out;
}

}  // namespace

void PartitionSpec::validate() const {
  if (percentile < 0 || percentile > 100) {
    throw std::invalid_argument("percentile must be in [0,100]");
  }
}

std::string PartitionSpec::label() const {
  return (kind == PartitionKind::kNontoxicLe ? "le" : "ge") +
         std::to_string(percentile);
}

bool PartitionSpec::keeps(double score, double boundary) const {
  return kind == PartitionKind::kNontoxicLe ? score <= boundary
                                            : score >= boundary;
}

PartitionSpec PartitionSpec::parse(const std::string& text) {
  const auto fail = [&] {
    throw std::invalid_argument(
        "partition spec must look like 'le:5' or 'ge:98': got '" + text + "'");
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    fail();
  }
  const std::string kind = text.substr(0, colon);
  PartitionSpec spec;
  if (kind == "le") {
    spec.kind = PartitionKind::kNontoxicLe;
  } else if (kind == "ge") {
    spec.kind = PartitionKind::kToxicGe;
  } else {
    fail();
  }
  const std::string number = text.substr(colon + 1);
  std::size_t used = 0;
  try {
    spec.percentile = std::stoi(number, &used);
  } catch (const std::exception&) {
    fail();
  }
  if (used != number.size()) {
    fail();
  }
  spec.validate();
  return spec;
}

void JsonlDocumentReader::read(std::istream& in,
                               const std::function<void(Document&&)>& fn) {
  std::unordered_set<std::string> seen_ids;
  for_each_line(in, [&](std::uint64_t line_no, const std::string& line) {
    const auto fail = [&](const std::string& why) {
      const std::string message = "line " + std::to_string(line_no) + ": " + why;
      if (strict_) {
        throw std::runtime_error(message);
      }
      log_warn("ingest: skipped " + message);
      ++skipped_;
    };

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("invalid JSON: ") + e.what());
      return;
    }
    if (!record.is_object()) {
      fail("record must be a JSON object");
      return;
    }

    Document doc;
    const auto id_it = record.find("id");
    if (id_it == record.end() || id_it->is_null()) {
      fail("missing field id");
      return;
    }
    if (id_it->is_string()) {
      doc.id = id_it->get<std::string>();
    } else if (id_it->is_number()) {
      doc.id = id_it->dump();
    } else {
      fail("field id must be a string");
      return;
    }

    const auto text_it = record.find("text");
    if (text_it == record.end() || text_it->is_null()) {
      fail("missing field text");
      return;
    }
    if (!text_it->is_string()) {
      fail("field text must be a string");
      return;
    }
    doc.text = text_it->get<std::string>();

    if (!seen_ids.insert(doc.id).second) {
      fail("duplicate id '" + doc.id + "'");
      return;
    }
    fn(std::move(doc));
  });
}

std::vector<Document> read_documents(std::istream& in, bool strict) {
  JsonlDocumentReader reader(strict);
  std::vector<Document> docs;
  reader.read(in, [&](Document&& doc) { docs.push_back(std::move(doc)); });
  return docs;
}

std::vector<Document> read_documents_file(const std::filesystem::path& path,
                                          bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_documents(in, strict);
}

void write_documents_file(const std::filesystem::path& path,
                          const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  for (const auto& doc : docs) {
    out << document_to_json(doc).dump() << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

FractionSampler::FractionSampler(double fraction, std::uint64_t seed)
    : fraction_(fraction), rng_(seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must be in (0,1]");
  }
}

bool FractionSampler::keep() {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < fraction_;
}

double nearest_rank_percentile(std::vector<double> scores, int percentile) {
  if (scores.empty()) {
    throw std::invalid_argument("nearest_rank_percentile: empty scores");
  }
  if (percentile < 0 || percentile > 100) {
    throw std::invalid_argument("percentile must be in [0,100]");
  }
  std::sort(scores.begin(), scores.end());
  return nearest_rank_sorted(scores, percentile);
}

std::vector<Document> partition_by_percentile(
    const std::vector<ScoredDocument>& scored, const PartitionSpec& spec) {
  spec.validate();
  if (scored.empty()) {
    throw std::runtime_error("partition: empty input");
  }
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& sd : scored) {
    scores.push_back(sd.scores.toxicity());
  }
  const double boundary = nearest_rank_percentile(std::move(scores),
                                                  spec.percentile);
  std::vector<Document> kept;
  for (const auto& sd : scored) {
    if (spec.keeps(sd.scores.toxicity(), boundary)) {
      kept.push_back(sd.document);
    }
  }
  return kept;
}

CorpusStats corpus_stats(const std::vector<ScoredDocument>& scored) {
  CorpusStats stats;
  if (scored.empty()) {
    return stats;
  }
  double sum = 0.0;
  for (const auto& sd : scored) {
    sum += sd.scores.toxicity();
    stats.total_bytes += sd.document.text.size();
  }
  stats.doc_count = scored.size();
  stats.avg_toxicity = sum / static_cast<double>(scored.size());
  return stats;
}

std::string utf8_prefix(const std::string& text, std::size_t max_chars) {
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < text.size() && chars < max_chars) {
    ++i;  // lead byte
    while (i < text.size() &&
           (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) {
      ++i;  // continuation bytes
    }
    ++chars;
  }
  return text.substr(0, i);
}

void PartitionOptions::validate() const {
  if (input_path.empty()) {
    throw std::invalid_argument("partition: input path required");
  }
  if (out_dir.empty()) {
    throw std::invalid_argument("partition: output directory required");
  }
  if (specs.empty()) {
    throw std::invalid_argument("partition: at least one spec required");
  }
  std::unordered_set<std::string> labels;
  for (const auto& spec : specs) {
    spec.validate();
    if (!labels.insert(spec.label()).second) {
      throw std::invalid_argument("partition: duplicate spec '" + spec.label() +
                                  "'");
    }
  }
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw std::invalid_argument("fraction must be in (0,1]");
  }
  if (truncate_chars == 0) {
    throw std::invalid_argument("truncate_chars must be >= 1");
  }
}

void write_score_index(const std::filesystem::path& path,
                       const std::vector<ScoreIndexEntry>& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  for (const auto& entry : index) {
    nlohmann::ordered_json record;
    record["id"] = entry.id;
    record["toxicity"] = entry.toxicity;
    out << record.dump() << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::vector<ScoreIndexEntry> read_score_index(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<ScoreIndexEntry> index;
  for_each_line(in, [&](std::uint64_t line_no, const std::string& line) {
    try {
      const auto record = nlohmann::json::parse(line);
      ScoreIndexEntry entry;
      entry.id = record.at("id").get<std::string>();
      entry.toxicity = record.at("toxicity").get<double>();
      index.push_back(std::move(entry));
    } catch (const std::exception& e) {
      throw std::runtime_error("score index " + path.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  });
  return index;
}

void for_each_document_tokens(
    const std::filesystem::path& path,
    const std::function<void(const std::vector<std::string>&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  JsonlDocumentReader reader(/*strict=*/true);
  reader.read(in, [&](Document&& doc) { fn(tokenize(doc.text)); });
}

PartitionResult run_partition(const PartitionOptions& options, Scorer& scorer) {
  options.validate();
  std::filesystem::create_directories(options.out_dir);
  const int workers =
      options.workers > 0 ? options.workers : default_worker_count();

  // Pass 1: sample + score (truncated) into an (id, toxicity) index.
  struct PendingDoc {
    std::string id;
    std::string truncated;
    std::uint64_t full_bytes = 0;
  };
  constexpr std::size_t kChunk = 512;

  PartitionResult result;
  std::vector<ScoreIndexEntry> index;
  double toxicity_sum = 0.0;

  {
    std::ifstream in(options.input_path, std::ios::binary);
    if (!in) {
      throw std::runtime_error("cannot open " + options.input_path.string());
    }
    JsonlDocumentReader reader(options.strict);
    FractionSampler sampler(options.sample_fraction, options.seed);

    std::vector<PendingDoc> chunk;
    chunk.reserve(kChunk);
    std::vector<AttributeScores> chunk_scores;

    const auto flush = [&] {
      if (chunk.empty()) {
        return;
      }
      chunk_scores.assign(chunk.size(), AttributeScores{});
      parallel_for(chunk.size(), workers, [&](std::size_t i) {
        chunk_scores[i] = scorer.score(chunk[i].truncated);
      });
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        const double toxicity = chunk_scores[i].toxicity();
        index.push_back({std::move(chunk[i].id), toxicity});
        toxicity_sum += toxicity;
        result.overall.total_bytes += chunk[i].full_bytes;
      }
      chunk.clear();
    };

    reader.read(in, [&](Document&& doc) {
      ++result.input_docs;
      if (!sampler.keep()) {
        return;
      }
      PendingDoc pending;
      pending.id = std::move(doc.id);
      pending.full_bytes = doc.text.size();
      pending.truncated = utf8_prefix(doc.text, options.truncate_chars);
      chunk.push_back(std::move(pending));
      if (chunk.size() >= kChunk) {
        flush();
      }
    });
    flush();
    result.skipped_lines = reader.skipped();
  }

  result.sampled_docs = index.size();
  result.overall.doc_count = index.size();
  if (!index.empty()) {
    result.overall.avg_toxicity =
        toxicity_sum / static_cast<double>(index.size());
  }
  if (index.empty()) {
    throw std::runtime_error("partition: no documents after sampling");
  }

  // Percentile boundaries from the score index.
  std::vector<double> sorted_scores;
  sorted_scores.reserve(index.size());
  for (const auto& entry : index) {
    sorted_scores.push_back(entry.toxicity);
  }
  std::sort(sorted_scores.begin(), sorted_scores.end());

  struct OpenPartition {
    PartitionSpec spec;
    double boundary = 0.0;
    std::ofstream out;
    CorpusStats stats;
    double toxicity_sum = 0.0;
    std::filesystem::path path;
  };
  std::vector<OpenPartition> parts;
  parts.reserve(options.specs.size());
  for (const auto& spec : options.specs) {
    OpenPartition part;
    part.spec = spec;
    part.boundary = nearest_rank_sorted(sorted_scores, spec.percentile);
    part.path = options.out_dir / (spec.label() + ".jsonl");
    part.out.open(part.path, std::ios::binary);
    if (!part.out) {
      throw std::runtime_error("cannot open " + part.path.string() +
                               " for writing");
    }
    parts.push_back(std::move(part));
  }

  // Pass 2: re-stream with the same sampler seed; route kept docs by score.
  {
    std::ifstream in(options.input_path, std::ios::binary);
    if (!in) {
      throw std::runtime_error("cannot open " + options.input_path.string());
    }
    JsonlDocumentReader reader(options.strict);
    FractionSampler sampler(options.sample_fraction, options.seed);
    std::size_t kept_index = 0;

    reader.read(in, [&](Document&& doc) {
      if (!sampler.keep()) {
        return;
      }
      if (kept_index >= index.size() || index[kept_index].id != doc.id) {
        throw std::runtime_error(
            "partition: input changed between scoring and partitioning passes");
      }
      const double toxicity = index[kept_index].toxicity;
      ++kept_index;
      const std::string line = document_to_json(doc).dump();
      for (auto& part : parts) {
        if (part.spec.keeps(toxicity, part.boundary)) {
          part.out << line << "\n";
          ++part.stats.doc_count;
          part.toxicity_sum += toxicity;
          part.stats.total_bytes += doc.text.size();
        }
      }
    });
    if (kept_index != index.size()) {
      throw std::runtime_error(
          "partition: input changed between scoring and partitioning passes");
    }
  }

  for (auto& part : parts) {
    part.out.flush();
    if (!part.out) {
      throw std::runtime_error("write failed: " + part.path.string());
    }
    if (part.stats.doc_count > 0) {
      part.stats.avg_toxicity =
          part.toxicity_sum / static_cast<double>(part.stats.doc_count);
    }
    result.parts[part.spec.label()] = {part.stats, part.boundary, part.path};
  }

  result.index_path = options.out_dir / "score_index.jsonl";
  write_score_index(result.index_path, index);

  nlohmann::ordered_json stats_doc;
  stats_doc["input_docs"] = result.input_docs;
  stats_doc["sampled_docs"] = result.sampled_docs;
  stats_doc["skipped_lines"] = result.skipped_lines;
  stats_doc["overall"] = stats_to_json(result.overall);
  auto& partition_stats = stats_doc["partitions"];
  partition_stats = nlohmann::ordered_json::object();
  for (const auto& [label, info] : result.parts) {
    auto entry = stats_to_json(info.stats);
    entry["boundary"] = info.boundary;
    entry["file"] = info.path.filename().string();
    partition_stats[label] = std::move(entry);
  }
  result.stats_path = options.out_dir / "stats.json";
  std::ofstream stats_out(result.stats_path, std::ios::binary);
  if (!stats_out) {
    throw std::runtime_error("cannot open " + result.stats_path.string() +
                             " for writing");
  }
  stats_out << stats_doc.dump(2) << "\n";
  if (!stats_out) {
    throw std::runtime_error("write failed: " + result.stats_path.string());
  }
  return result;
}

}  // namespace detox
