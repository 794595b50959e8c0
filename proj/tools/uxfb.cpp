// uxfb: survey-feedback pipeline driver.
//
// Exit codes: 0 ok, 1 I/O or endpoint failure, 2 schema/config/usage error,
// 3 fingerprint or length mismatch, 4 no survey responses, 5 summary validation failure.

#include <iostream>

#include "CLI11.hpp"
#include "uxfb/config.hpp"
#include "uxfb/error.hpp"
#include "uxfb/pipeline.hpp"
#include "uxfb/timeutil.hpp"

namespace fs = std::filesystem;
using namespace uxfb;

int main(int argc, char** argv) {
  CLI::App app{"uxfb: classify, analyze and summarize survey feedback"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<std::string> period;
  app.add_option("--config", config_path, "pipeline config (TOML); default ./uxfb.toml if present");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--period", period, "YYYY, YYYYQn or YYYY-MM-DD..YYYY-MM-DD (half-open, UTC)");

  pipeline::IngestArgs ingest_args;
  std::string format_name, policy_name = "last-wins";
  auto* ingest = app.add_subcommand("ingest", "validate and store comments/responses, or merge corrections");
  ingest->add_option("comments", ingest_args.comments, "comments file (JSONL or CSV)");
  ingest->add_option("--responses", ingest_args.responses, "survey responses file");
  ingest->add_option("--format", format_name, "jsonl or csv (default: from extension)")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ingest->add_option("--corrections", ingest_args.corrections, "JSONL of human label corrections to merge");
  ingest->add_option("--policy", policy_name, "intercoder conflict policy")
      ->check(CLI::IsMember({"last-wins", "union", "reject"}));

  auto* tune = app.add_subcommand("tune", "grid search over boosting parameters");

  pipeline::TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train or retrain the classifier bundle");
  train->add_flag("--fresh", train_args.fresh, "ignore any existing bundle");

  pipeline::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "per-label and micro F1 (cross-validated by default)");
  evaluate->add_option("--predictions", eval_args.predictions, "score a JSONL file of {id, labels} instead");

  auto* predict = app.add_subcommand("predict", "label non-human comments with the trained bundle");

  pipeline::StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "survey statistics reports and curve CSVs");
  stats->add_option("--survey", stats_args.survey, "tutorial, app or all")
      ->check(CLI::IsMember({"tutorial", "app", "all"}));

  pipeline::SummarizeArgs summ_args;
  std::vector<std::string> expand;
  auto* summarize = app.add_subcommand("summarize", "per-product summaries with citation validation");
  summarize->add_option("--product", summ_args.product, "only this product");
  summarize->add_option("--expand", expand, "comment ids whose citations are widened to the full text");

  auto* report = app.add_subcommand("report", "assemble the markdown report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::kSchema;
  }

  cfg::PipelineConfig config;
  try {
    if (!config_path.empty())
      config = cfg::load_config(config_path);
    else if (fs::exists("uxfb.toml"))
      config = cfg::load_config("uxfb.toml");
    if (seed) {
      config.seed = *seed;
      config.summary.seed = *seed;
    }
    if (jobs) config.jobs = *jobs;
    if (period) config.period = *period;
    if (!config.period.empty()) {
      const auto parsed = parse_period(config.period);
      if (!parsed) throw Error(ErrorKind::Config, "bad period '" + config.period + "'");
      config.period = parsed->name;
    }
    config.validate();
  } catch (const LineError& e) {
    std::cerr << "error: " << config_path << ": line " << e.line() << ": " << e.what() << '\n';
    return pipeline::exit_code_for(e.kind());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pipeline::exit_code_for(e.kind());
  }

  pipeline::Streams io{std::cout, std::cerr};
  if (*ingest) {
    if (!format_name.empty()) ingest_args.format = format_name == "csv" ? FileFormat::Csv : FileFormat::Jsonl;
    ingest_args.policy = policy_name == "union"    ? ConflictPolicy::Union
                         : policy_name == "reject" ? ConflictPolicy::Reject
                                                   : ConflictPolicy::LastWins;
    return pipeline::cmd_ingest(config, ingest_args, io);
  }
  if (*tune) return pipeline::cmd_tune(config, io);
  if (*train) return pipeline::cmd_train(config, train_args, io);
  if (*evaluate) return pipeline::cmd_evaluate(config, eval_args, io);
  if (*predict) return pipeline::cmd_predict(config, io);
  if (*stats) return pipeline::cmd_stats(config, stats_args, io);
  if (*summarize) {
    summ_args.expand = {expand.begin(), expand.end()};
    return pipeline::cmd_summarize(config, summ_args, io);
  }
  if (*report) return pipeline::cmd_report(config, io);
  return pipeline::kSchema;
}
