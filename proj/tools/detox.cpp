// Command-line front end for the detoxification pipeline:
//   partition -> train -> generate -> evaluate
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detox/corpus.hpp"
#include "detox/decoding.hpp"
#include "detox/eval.hpp"
#include "detox/lm.hpp"
#include "detox/log.hpp"
#include "detox/scoring.hpp"
#include "detox/tokens.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw std::invalid_argument(what + ": no such file: " + path.string());
  }
}

detox::LogLevel parse_log_level(const std::string& name) {
  if (name == "debug") return detox::LogLevel::kDebug;
  if (name == "info") return detox::LogLevel::kInfo;
  if (name == "warn") return detox::LogLevel::kWarn;
  if (name == "error") return detox::LogLevel::kError;
  return detox::LogLevel::kOff;
}

struct ScorerCliOptions {
  std::string mode = "lexicon";
  std::string lexicon_path;
  std::string endpoint;
  std::string cache_path;
  double rate_limit = 10.0;
};

void add_scorer_options(CLI::App* cmd, ScorerCliOptions& opts) {
  cmd->add_option("--scorer", opts.mode, "Scorer backend")
      ->check(CLI::IsMember({"lexicon", "remote"}))
      ->capture_default_str();
  cmd->add_option("--lexicon", opts.lexicon_path,
                  "Lexicon JSON file (lexicon scorer)");
  cmd->add_option("--endpoint", opts.endpoint,
                  "Scoring service URL (remote scorer); API key is read "
                  "from DETOX_API_KEY");
  cmd->add_option("--cache", opts.cache_path,
                  "Score cache file (remote scorer)");
  cmd->add_option("--rate-limit", opts.rate_limit,
                  "Remote requests per second")
      ->capture_default_str();
}

detox::ScorerConfig to_scorer_config(const ScorerCliOptions& opts) {
  detox::ScorerConfig config;
  if (opts.mode == "lexicon") {
    config.mode = detox::ScorerMode::kLexicon;
    if (opts.lexicon_path.empty()) {
      throw std::invalid_argument("--lexicon is required with the lexicon scorer");
    }
    require_file(opts.lexicon_path, "lexicon");
    config.lexicon_path = opts.lexicon_path;
  } else {
    config.mode = detox::ScorerMode::kRemote;
    if (opts.endpoint.empty()) {
      throw std::invalid_argument("--endpoint is required with the remote scorer");
    }
    config.endpoint = opts.endpoint;
    config.cache_path = opts.cache_path;
    if (const char* key = std::getenv("DETOX_API_KEY")) {
      config.api_key = key;
    }
  }
  config.rate_limit = opts.rate_limit;
  config.validate();
  return config;
}

std::string sanitize_label(const std::string& label) {
  if (label.empty()) {
    throw std::invalid_argument("method label must be non-empty");
  }
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.' ||
                    c == '+';
    if (!ok) {
      throw std::invalid_argument(
          "method label may only contain [A-Za-z0-9_.+-]: '" + label + "'");
    }
  }
  return label;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string log_level = "warn";
  bool seed_given = false;
};

// --- partition --------------------------------------------------------------

struct PartitionCli {
  std::string input;
  std::string out_dir;
  std::vector<std::string> specs;
  double fraction = 1.0;
  std::size_t truncate_chars = 2000;
  bool lenient = false;
  ScorerCliOptions scorer;
};

int cmd_partition(const GlobalOptions& global, const PartitionCli& cli) {
  require_file(cli.input, "input corpus");
  detox::PartitionOptions options;
  options.input_path = cli.input;
  options.out_dir = cli.out_dir;
  for (const auto& raw : cli.specs) {
    options.specs.push_back(detox::PartitionSpec::parse(raw));
  }
  options.sample_fraction = cli.fraction;
  options.seed = global.seed;
  options.workers = global.workers;
  options.truncate_chars = cli.truncate_chars;
  options.strict = !cli.lenient;
  options.validate();

  auto scorer = detox::make_scorer(to_scorer_config(cli.scorer));
  const auto result = detox::run_partition(options, *scorer);

  std::printf("partitioned %llu/%llu sampled docs (avg toxicity %.4f)\n",
              static_cast<unsigned long long>(result.sampled_docs),
              static_cast<unsigned long long>(result.input_docs),
              result.overall.avg_toxicity);
  for (const auto& [label, info] : result.parts) {
    std::printf("  %s: %llu docs, avg toxicity %.4f, boundary %.4f -> %s\n",
                label.c_str(),
                static_cast<unsigned long long>(info.stats.doc_count),
                info.stats.avg_toxicity, info.boundary,
                info.path.string().c_str());
  }
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainCli {
  std::string corpus;
  std::string out;
  int order = 3;
  double smoothing_k = 0.1;
  std::size_t vocab_size = 50000;
  std::vector<std::string> shared_vocab;
};

int cmd_train(const TrainCli& cli) {
  require_file(cli.corpus, "training corpus");
  for (const auto& path : cli.shared_vocab) {
    require_file(path, "shared-vocab corpus");
  }

  detox::VocabBuilder builder;
  const std::vector<std::string> vocab_sources =
      cli.shared_vocab.empty() ? std::vector<std::string>{cli.corpus}
                               : cli.shared_vocab;
  for (const auto& path : vocab_sources) {
    detox::for_each_document_tokens(
        path, [&](const std::vector<std::string>& tokens) {
          builder.add_sequence(tokens);
        });
  }
  const detox::Vocabulary vocab = builder.build(cli.vocab_size);

  detox::NGramModel model(cli.order, cli.smoothing_k, vocab);
  std::uint64_t sequences = 0;
  detox::for_each_document_tokens(
      cli.corpus, [&](const std::vector<std::string>& tokens) {
        model.add_sequence(vocab.encode(tokens));
        ++sequences;
      });
  model.save_file(cli.out);

  std::printf(
      "trained order-%d model on %llu sequences (%llu tokens); "
      "vocab size %zu (%llu distinct types seen) -> %s\n",
      cli.order, static_cast<unsigned long long>(sequences),
      static_cast<unsigned long long>(model.tokens_seen()), vocab.size(),
      static_cast<unsigned long long>(builder.distinct_tokens()),
      cli.out.c_str());
  return 0;
}

// --- generate ---------------------------------------------------------------

struct GenerateCli {
  std::string config;
  std::string prompts;
  std::string out;
  bool challenging_only = false;
  std::string domain;
  int generations_per_prompt = 1;
};

int cmd_generate(const GlobalOptions& global, const GenerateCli& cli) {
  require_file(cli.config, "decoder config");
  require_file(cli.prompts, "prompts file");

  detox::DecoderSpec spec = detox::DecoderSpec::load_file(cli.config);
  require_file(spec.m_org, "m_org model");
  require_file(spec.m_dapt, "m_dapt model");
  if (global.seed_given) {
    spec.config.seed = global.seed;  // flags win over config files
  }

  detox::PromptFilter filter;
  if (cli.challenging_only || !cli.domain.empty()) {
    filter = [&](const detox::PromptRecord& prompt) {
      if (cli.challenging_only && !prompt.challenging.value_or(false)) {
        return false;
      }
      if (!cli.domain.empty() &&
          prompt.domain.value_or(std::string()) != cli.domain) {
        return false;
      }
      return true;
    };
  }
  const auto prompts = detox::load_prompts(cli.prompts, filter);
  if (prompts.empty()) {
    throw std::runtime_error("no prompts left after filtering");
  }

  const detox::EnsembleDecoder decoder = detox::make_decoder(spec);
  detox::EvalOptions options;
  options.workers = global.workers;
  options.generations_per_prompt = cli.generations_per_prompt;
  const auto records = detox::generate_records(decoder, prompts, options);
  detox::write_generations_file(cli.out, records, /*include_scores=*/false);

  std::printf("generated %zu continuations for %zu prompts -> %s\n",
              records.size(), prompts.size(), cli.out.c_str());
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateCli {
  std::vector<std::string> generations;  // label=path
  std::string out_dir;
  std::string baseline;
  double threshold = 0.5;
  ScorerCliOptions scorer;
};

int cmd_evaluate(const GlobalOptions& global, const EvaluateCli& cli) {
  struct MethodInput {
    std::string label;
    std::filesystem::path path;
  };
  std::vector<MethodInput> methods;
  for (const auto& raw : cli.generations) {
    const auto eq = raw.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == raw.size()) {
      throw std::invalid_argument("--gen expects label=path: '" + raw + "'");
    }
    MethodInput method;
    method.label = sanitize_label(raw.substr(0, eq));
    method.path = raw.substr(eq + 1);
    require_file(method.path, "generations for " + method.label);
    methods.push_back(std::move(method));
  }

  auto scorer = detox::make_scorer(to_scorer_config(cli.scorer));
  std::filesystem::create_directories(cli.out_dir);
  const std::filesystem::path out_dir(cli.out_dir);

  std::vector<detox::AttributeReport> reports;
  for (const auto& method : methods) {
    auto records = detox::read_generations_file(method.path);
    records = detox::score_generations(std::move(records), *scorer,
                                       global.workers);
    reports.push_back(
        detox::empirical_probabilities(records, cli.threshold, method.label));
    detox::write_generations_file(out_dir / (method.label + ".scored.jsonl"),
                                  records, /*include_scores=*/true);
    write_text_file(out_dir / ("histogram_" + method.label + ".csv"),
                    detox::histogram_csv(detox::toxicity_histogram(records)));
  }

  std::optional<std::string> baseline;
  if (!cli.baseline.empty()) {
    baseline = cli.baseline;
  }
  const std::string markdown =
      detox::emit_report(reports, baseline, detox::ReportFormat::kMarkdown);
  write_text_file(out_dir / "report.md", markdown);
  write_text_file(out_dir / "report.csv",
                  detox::emit_report(reports, baseline,
                                     detox::ReportFormat::kCsv));

  std::fputs(markdown.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoding-time language model detoxification toolkit"};
  app.require_subcommand(1);
  // Global options (--seed, --workers, --log-level) may also be given after
  // the subcommand name.
  app.fallthrough();
  app.set_version_flag("--version", "detox 0.1.0");

  GlobalOptions global;
  auto* seed_opt =
      app.add_option("--seed", global.seed, "Master RNG seed")
          ->capture_default_str();
  app.add_option("--workers", global.workers,
                 "Worker threads (0 = all cores)")
      ->capture_default_str();
  app.add_option("--log-level", global.log_level, "Log verbosity")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  PartitionCli partition_cli;
  auto* partition_cmd = app.add_subcommand(
      "partition", "Score a corpus and carve percentile partitions");
  partition_cmd->add_option("--input", partition_cli.input, "Input JSONL corpus")
      ->required();
  partition_cmd->add_option("--out-dir", partition_cli.out_dir,
                            "Output directory")
      ->required();
  partition_cmd
      ->add_option("--spec", partition_cli.specs,
                   "Partition spec like le:5 or ge:98 (repeatable)")
      ->required();
  partition_cmd
      ->add_option("--fraction", partition_cli.fraction,
                   "Subsampling fraction in (0,1]")
      ->capture_default_str();
  partition_cmd
      ->add_option("--truncate-chars", partition_cli.truncate_chars,
                   "Characters of text scored per document")
      ->capture_default_str();
  partition_cmd->add_flag("--lenient", partition_cli.lenient,
                          "Skip malformed lines instead of failing");
  add_scorer_options(partition_cmd, partition_cli.scorer);

  TrainCli train_cli;
  auto* train_cmd =
      app.add_subcommand("train", "Train an n-gram model on a JSONL corpus");
  train_cmd->add_option("--corpus", train_cli.corpus, "Training JSONL corpus")
      ->required();
  train_cmd->add_option("--out", train_cli.out, "Model output path")
      ->required();
  train_cmd->add_option("--order", train_cli.order, "N-gram order")
      ->capture_default_str();
  train_cmd->add_option("--k", train_cli.smoothing_k, "Add-k smoothing constant")
      ->capture_default_str();
  train_cmd
      ->add_option("--vocab-size", train_cli.vocab_size,
                   "Maximum vocabulary size (including reserved tokens)")
      ->capture_default_str();
  train_cmd->add_option(
      "--shared-vocab", train_cli.shared_vocab,
      "Build the vocabulary from these corpora instead of --corpus "
      "(repeat for a union; use the same set for every ensemble member)");

  GenerateCli generate_cli;
  auto* generate_cmd = app.add_subcommand(
      "generate", "Generate continuations with a decoder config");
  generate_cmd
      ->add_option("--config", generate_cli.config, "Decoder config JSON")
      ->required();
  generate_cmd->add_option("--prompts", generate_cli.prompts, "Prompts JSONL")
      ->required();
  generate_cmd->add_option("--out", generate_cli.out, "Generations output path")
      ->required();
  generate_cmd->add_flag("--challenging-only", generate_cli.challenging_only,
                         "Keep only prompts flagged challenging");
  generate_cmd->add_option("--domain", generate_cli.domain,
                           "Keep only prompts with this domain");
  generate_cmd
      ->add_option("--generations-per-prompt",
                   generate_cli.generations_per_prompt,
                   "Continuations per prompt")
      ->capture_default_str();

  EvaluateCli evaluate_cli;
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "Score generations and emit attribute reports");
  evaluate_cmd
      ->add_option("--gen", evaluate_cli.generations,
                   "label=generations.jsonl (repeatable)")
      ->required();
  evaluate_cmd->add_option("--out-dir", evaluate_cli.out_dir,
                           "Report output directory")
      ->required();
  evaluate_cmd->add_option("--baseline", evaluate_cli.baseline,
                           "Method label used for delta annotations");
  evaluate_cmd
      ->add_option("--threshold", evaluate_cli.threshold,
                   "Attribute probability threshold")
      ->capture_default_str();
  add_scorer_options(evaluate_cmd, evaluate_cli.scorer);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : kExitUsage;
  }
  global.seed_given = seed_opt->count() > 0;
  detox::set_log_level(parse_log_level(global.log_level));

  try {
    if (partition_cmd->parsed()) {
      return cmd_partition(global, partition_cli);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_cli);
    }
    if (generate_cmd->parsed()) {
      return cmd_generate(global, generate_cli);
    }
    if (evaluate_cmd->parsed()) {
      return cmd_evaluate(global, evaluate_cli);
    }
    std::fputs("no subcommand given\n", stderr);
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
