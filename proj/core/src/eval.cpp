#include "detox/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
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

[[noreturn]] void line_error(std::uint64_t line_no, const std::string& why) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + why);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out += "\"\"";
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::vector<PromptRecord> load_prompts(const std::filesystem::path& path,
                                       const PromptFilter& filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<PromptRecord> prompts;
  std::unordered_set<std::string> seen_ids;
  for_each_line(in, [&](std::uint64_t line_no, const std::string& line) {
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) {
      line_error(line_no, "record must be a JSON object");
    }

    PromptRecord prompt;
    if (const auto nested = record.find("prompt"); nested != record.end()) {
      // RealToxicityPrompts-style: {"prompt":{"text":...},"challenging":...}
      if (!nested->is_object() || !nested->contains("text") ||
          !(*nested)["text"].is_string()) {
        line_error(line_no, "missing field prompt.text");
      }
      prompt.text = (*nested)["text"].get<std::string>();
    } else if (const auto flat = record.find("text"); flat != record.end()) {
      if (!flat->is_string()) {
        line_error(line_no, "field text must be a string");
      }
      prompt.text = flat->get<std::string>();
    } else {
      line_error(line_no,
                 "record matches neither {id, text} nor {prompt: {text}} shape");
    }

    if (const auto id = record.find("id"); id != record.end()) {
      if (id->is_string()) {
        prompt.id = id->get<std::string>();
      } else if (id->is_number()) {
        prompt.id = id->dump();
      } else {
        line_error(line_no, "field id must be a string");
      }
    } else {
      prompt.id = "line-" + std::to_string(line_no);
    }

    if (const auto ch = record.find("challenging"); ch != record.end()) {
      if (!ch->is_boolean()) {
        line_error(line_no, "field challenging must be a boolean");
      }
      prompt.challenging = ch->get<bool>();
    }
    if (const auto dom = record.find("domain"); dom != record.end()) {
      if (!dom->is_string()) {
        line_error(line_no, "field domain must be a string");
      }
      prompt.domain = dom->get<std::string>();
    }

    if (!seen_ids.insert(prompt.id).second) {
      line_error(line_no, "duplicate id '" + prompt.id + "'");
    }
    if (!filter || filter(prompt)) {
      prompts.push_back(std::move(prompt));
    }
  });
  return prompts;
}

std::vector<GenerationRecord> generate_records(
    const EnsembleDecoder& decoder, const std::vector<PromptRecord>& prompts,
    const EvalOptions& options) {
  if (prompts.empty()) {
    throw std::invalid_argument("generate_records: no prompts");
  }
  if (options.generations_per_prompt < 1) {
    throw std::invalid_argument("generations_per_prompt must be >= 1");
  }
  const std::size_t gens =
      static_cast<std::size_t>(options.generations_per_prompt);
  const std::size_t total = prompts.size() * gens;
  std::vector<GenerationRecord> records(total);

  parallel_for(total, options.workers, [&](std::size_t idx) {
    const PromptRecord& prompt = prompts[idx / gens];
    const std::size_t g = idx % gens;

    TokenSequence ids = decoder.vocab().encode(tokenize(prompt.text));
    if (ids.empty()) {
      ids.push_back(Vocabulary::kBosId);
    }
    const std::uint64_t seed = derive_seed(
        decoder.config().seed, prompt.id + "#" + std::to_string(g));
    const TokenSequence continuation = decoder.generate(ids, seed);

    records[idx].prompt_id = prompt.id;
    records[idx].continuation = decoder.vocab().decode(continuation);
  });
  return records;
}

std::vector<GenerationRecord> score_generations(
    std::vector<GenerationRecord> records, Scorer& scorer, int workers) {
  parallel_for(records.size(), workers, [&](std::size_t i) {
    try {
      records[i].scores = scorer.score(records[i].continuation);
      records[i].scores.validate();
      records[i].failed = false;
    } catch (const std::exception& e) {
      records[i].scores = AttributeScores{};
      records[i].failed = true;
      log_warn("scoring failed for prompt " + records[i].prompt_id + ": " +
               e.what());
    }
  });
  const auto failed = static_cast<std::uint64_t>(
      std::count_if(records.begin(), records.end(),
                    [](const GenerationRecord& r) { return r.failed; }));
  if (failed > 0) {
    log_warn(std::to_string(failed) + " of " + std::to_string(records.size()) +
             " generations failed scoring and are excluded from reports");
  }
  return records;
}

std::vector<GenerationRecord> run_eval(const EnsembleDecoder& decoder,
                                       const std::vector<PromptRecord>& prompts,
                                       Scorer& scorer,
                                       const EvalOptions& options) {
  return score_generations(generate_records(decoder, prompts, options), scorer,
                           options.workers);
}

AttributeReport empirical_probabilities(
    const std::vector<GenerationRecord>& records, double threshold,
    const std::string& method_label) {
  if (records.empty()) {
    throw std::invalid_argument("empirical_probabilities: no records");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must be in [0,1]");
  }
  AttributeReport report;
  report.method_label = method_label;
  std::array<std::uint64_t, kAttributeCount> hits{};
  for (const auto& record : records) {
    if (record.failed) {
      ++report.failed;
      continue;
    }
    ++report.n_prompts;
    for (Attribute a : all_attributes()) {
      if (record.scores[a] >= threshold) {
        ++hits[static_cast<std::size_t>(a)];
      }
    }
  }
  if (report.n_prompts == 0) {
    throw std::runtime_error(
        "empirical_probabilities: every record failed scoring");
  }
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    report.probabilities[i] =
        static_cast<double>(hits[i]) / static_cast<double>(report.n_prompts);
  }
  return report;
}

std::uint64_t Histogram::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts) {
    sum += c;
  }
  return sum;
}

Histogram toxicity_histogram(const std::vector<GenerationRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("toxicity_histogram: no records");
  }
  Histogram histogram;
  for (std::size_t i = 0; i <= Histogram::kBins; ++i) {
    histogram.bin_edges[i] = static_cast<double>(i) / 20.0;
  }
  for (const auto& record : records) {
    if (record.failed) {
      continue;
    }
    const double score = record.scores.toxicity();
    const auto bin = std::min<std::size_t>(
        Histogram::kBins - 1,
        static_cast<std::size_t>(score * static_cast<double>(Histogram::kBins)));
    ++histogram.counts[bin];
  }
  return histogram;
}

std::string histogram_csv(const Histogram& histogram) {
  std::string out = "bin_start,bin_end,count\n";
  for (std::size_t i = 0; i < Histogram::kBins; ++i) {
    out += format_fixed(histogram.bin_edges[i], 2);
    out += ',';
    out += format_fixed(histogram.bin_edges[i + 1], 2);
    out += ',';
    out += std::to_string(histogram.counts[i]);
    out += '\n';
  }
  return out;
}

std::string format_percent(double fraction) {
  const double pct = fraction * 100.0;
  if (pct <= 0.0) {
    return "0.00";
  }
  if (pct >= 99.95) {
    return format_fixed(pct, 0);
  }
  int decimals = 3;
  if (pct >= 9.995) {
    decimals = 1;
  } else if (pct >= 0.9995) {
    decimals = 2;
  }
  return format_fixed(pct, decimals);
}

std::string format_delta(double baseline_fraction, double value_fraction) {
  const double diff = baseline_fraction * 100.0 - value_fraction * 100.0;
  if (diff >= 0.0) {
    return "↓" + format_fixed(diff, 1);
  }
  return "↑" + format_fixed(-diff, 1);
}

std::string emit_report(const std::vector<AttributeReport>& reports,
                        const std::optional<std::string>& baseline_label,
                        ReportFormat format) {
  const AttributeReport* baseline = nullptr;
  if (baseline_label) {
    for (const auto& report : reports) {
      if (report.method_label == *baseline_label) {
        baseline = &report;
        break;
      }
    }
    if (baseline == nullptr) {
      throw std::invalid_argument("unknown baseline label '" + *baseline_label +
                                  "'");
    }
  }

  std::string out;
  if (format == ReportFormat::kMarkdown) {
    out = "| method |";
    for (Attribute a : all_attributes()) {
      out += ' ';
      out += attribute_name(a);
      out += " |";
    }
    out += " n | failed |\n|---|";
    for (std::size_t i = 0; i < kAttributeCount + 2; ++i) {
      out += "---|";
    }
    out += '\n';
    for (const auto& report : reports) {
      out += "| " + report.method_label + " |";
      for (Attribute a : all_attributes()) {
        out += ' ';
        if (baseline != nullptr && &report != baseline) {
          out += format_delta(baseline->probabilities[static_cast<std::size_t>(a)],
                              report.probabilities[static_cast<std::size_t>(a)]);
          out += ' ';
        }
        out += format_percent(report.probabilities[static_cast<std::size_t>(a)]);
        out += " |";
      }
      out += ' ' + std::to_string(report.n_prompts) + " | " +
             std::to_string(report.failed) + " |\n";
    }
    return out;
  }

  out = "method";
  for (Attribute a : all_attributes()) {
    out += ',';
    out += attribute_name(a);
  }
  out += ",n,failed\n";
  for (const auto& report : reports) {
    out += csv_escape(report.method_label);
    for (Attribute a : all_attributes()) {
      out += ',';
      out += format_percent(report.probabilities[static_cast<std::size_t>(a)]);
    }
    out += ',' + std::to_string(report.n_prompts) + ',' +
           std::to_string(report.failed) + '\n';
  }
  return out;
}

void write_generations_file(const std::filesystem::path& path,
                            const std::vector<GenerationRecord>& records,
                            bool include_scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  for (const auto& record : records) {
    nlohmann::ordered_json line;
    line["prompt_id"] = record.prompt_id;
    line["continuation"] = record.continuation;
    if (include_scores) {
      auto& scores = line["scores"];
      scores = nlohmann::ordered_json::object();
      for (Attribute a : all_attributes()) {
        scores[std::string(attribute_name(a))] = record.scores[a];
      }
    }
    if (record.failed) {
      line["failed"] = true;
    }
    out << line.dump() << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::vector<GenerationRecord> read_generations_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<GenerationRecord> records;
  for_each_line(in, [&](std::uint64_t line_no, const std::string& line) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
      line_error(line_no, "record must be a JSON object");
    }
    GenerationRecord record;
    if (!doc.contains("prompt_id") || !doc["prompt_id"].is_string()) {
      line_error(line_no, "missing field prompt_id");
    }
    record.prompt_id = doc["prompt_id"].get<std::string>();
    if (!doc.contains("continuation") || !doc["continuation"].is_string()) {
      line_error(line_no, "missing field continuation");
    }
    record.continuation = doc["continuation"].get<std::string>();
    if (const auto scores = doc.find("scores"); scores != doc.end()) {
      if (!scores->is_object()) {
        line_error(line_no, "field scores must be an object");
      }
      for (Attribute a : all_attributes()) {
        const std::string name(attribute_name(a));
        if (!scores->contains(name) || !(*scores)[name].is_number()) {
          line_error(line_no, "scores missing attribute " + name);
        }
        record.scores[a] = (*scores)[name].get<double>();
      }
    }
    if (const auto failed = doc.find("failed"); failed != doc.end()) {
      if (!failed->is_boolean()) {
        line_error(line_no, "field failed must be a boolean");
      }
      record.failed = failed->get<bool>();
    }
    records.push_back(std::move(record));
  });
  return records;
}

}  // namespace detox
