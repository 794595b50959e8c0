#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>

#include "uxfb/config.hpp"
#include "uxfb/corpus.hpp"
#include "uxfb/matrix.hpp"
#include "uxfb/textprep.hpp"

// The command implementations behind the uxfb executable. Each returns a
// process exit code:
//   0 ok, 1 I/O or endpoint failure, 2 schema/config/usage error,
//   3 model/embedding fingerprint or evaluation length mismatch,
//   4 no survey responses for the requested kind, 5 summary validation failure.

namespace uxfb::pipeline {

enum Exit : int { kOk = 0, kIo = 1, kSchema = 2, kMismatch = 3, kNoResponses = 4, kValidation = 5 };

struct Streams {
  std::ostream& out;  // data
  std::ostream& err;  // diagnostics
};

int exit_code_for(ErrorKind kind);

/// Comments, responses and taxonomy from the configured paths.
Corpus load_corpus(const cfg::PipelineConfig& config);
/// load_corpus restricted to the configured period, if any.
Corpus load_period_corpus(const cfg::PipelineConfig& config);
Embedder make_embedder(const cfg::PipelineConfig& config);
Matrix embed_matrix(const Embedder& embedder, std::span<const std::string> texts, unsigned jobs);

struct IngestArgs {
  std::filesystem::path comments;      // input comments file
  std::filesystem::path responses;     // optional input responses file
  std::optional<FileFormat> format;    // default: from the file extension
  std::filesystem::path corrections;   // merge human corrections into the stored corpus instead
  ConflictPolicy policy = ConflictPolicy::LastWins;
};
int cmd_ingest(const cfg::PipelineConfig& config, const IngestArgs& args, Streams io);

int cmd_tune(const cfg::PipelineConfig& config, Streams io);

struct TrainArgs {
  bool fresh = false;  // ignore an existing bundle instead of retraining it
};
int cmd_train(const cfg::PipelineConfig& config, const TrainArgs& args, Streams io);

struct EvaluateArgs {
  std::filesystem::path predictions;  // JSONL {id, labels}; empty: cross-validation
};
int cmd_evaluate(const cfg::PipelineConfig& config, const EvaluateArgs& args, Streams io);

int cmd_predict(const cfg::PipelineConfig& config, Streams io);

struct StatsArgs {
  std::string survey = "all";  // tutorial, app or all
};
int cmd_stats(const cfg::PipelineConfig& config, const StatsArgs& args, Streams io);

struct SummarizeArgs {
  std::string product;               // empty: every product
  std::set<std::string> expand;      // comment ids whose extracts are expanded to the full text
};
int cmd_summarize(const cfg::PipelineConfig& config, const SummarizeArgs& args, Streams io);

int cmd_report(const cfg::PipelineConfig& config, Streams io);

}  // namespace uxfb::pipeline
