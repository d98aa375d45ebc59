#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "detox/decoding.hpp"
#include "detox/scoring.hpp"

namespace detox {

struct PromptRecord {
  std::string id;
  std::string text;
  std::optional<bool> challenging;
  std::optional<std::string> domain;
};

using PromptFilter = std::function<bool(const PromptRecord&)>;

// Parses JSONL prompts in either the flat {id, text} shape or the nested
// {prompt:{text}, challenging} shape; records without an id get "line-<N>".
std::vector<PromptRecord> load_prompts(const std::filesystem::path& path,
                                       const PromptFilter& filter = nullptr);

struct GenerationRecord {
  std::string prompt_id;
  std::string continuation;
  AttributeScores scores;
  bool failed = false;  // scorer error: excluded from report denominators
};

struct EvalOptions {
  int workers = 0;  // <= 0 means default_worker_count()
  int generations_per_prompt = 1;
};

// Generates continuations for every prompt, in prompt order regardless of
// worker scheduling. Each generation draws its own seed from the decoder
// seed, the prompt id, and the generation index. Prompts that tokenize to
// nothing are generated from a bare begin-of-sequence context.
std::vector<GenerationRecord> generate_records(
    const EnsembleDecoder& decoder, const std::vector<PromptRecord>& prompts,
    const EvalOptions& options = {});

// Scores each record's continuation in parallel; a scorer exception marks
// the record failed rather than aborting the run.
std::vector<GenerationRecord> score_generations(
    std::vector<GenerationRecord> records, Scorer& scorer, int workers = 0);

// generate_records + score_generations.
std::vector<GenerationRecord> run_eval(const EnsembleDecoder& decoder,
                                       const std::vector<PromptRecord>& prompts,
                                       Scorer& scorer,
                                       const EvalOptions& options = {});

struct AttributeReport {
  std::string method_label;
  // Fraction of scored generations whose attribute is >= threshold.
  std::array<double, kAttributeCount> probabilities{};
  std::uint64_t n_prompts = 0;  // denominator: successfully scored records
  std::uint64_t failed = 0;
};

AttributeReport empirical_probabilities(
    const std::vector<GenerationRecord>& records, double threshold,
    const std::string& method_label);

struct Histogram {
  static constexpr std::size_t kBins = 20;
  std::array<double, kBins + 1> bin_edges{};  // 0.00, 0.05, ..., 1.00
  std::array<std::uint64_t, kBins> counts{};
  std::uint64_t total() const;
};

// Toxicity scores of scored (non-failed) records binned over [0,1]; the last
// bin includes its right edge.
Histogram toxicity_histogram(const std::vector<GenerationRecord>& records);

// CSV with header bin_start,bin_end,count.
std::string histogram_csv(const Histogram& histogram);

enum class ReportFormat { kMarkdown, kCsv };

// Percentage with 3 significant figures: 0.389 -> "38.9", 0.086 -> "8.60",
// 0.0575 -> "5.75", 0 -> "0.00", 1 -> "100".
std::string format_percent(double fraction);

// Delta annotation in percentage points vs. a baseline: baseline 0.389 and
// value 0.295 render as a 9.4-point drop.
std::string format_delta(double baseline_fraction, double value_fraction);

// Renders one row per report with attribute columns in the fixed order.
// When baseline_label is set, every other row's cells are prefixed with the
// delta vs. that baseline.
std::string emit_report(const std::vector<AttributeReport>& reports,
                        const std::optional<std::string>& baseline_label,
                        ReportFormat format);

// Generations JSONL: {"prompt_id", "continuation"[, "scores"{8}][, "failed"]}.
void write_generations_file(const std::filesystem::path& path,
                            const std::vector<GenerationRecord>& records,
                            bool include_scores);
std::vector<GenerationRecord> read_generations_file(
    const std::filesystem::path& path);

}  // namespace detox
