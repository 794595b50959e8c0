#include "uxfb/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "uxfb/error.hpp"
#include "uxfb/gbt.hpp"
#include "uxfb/multilabel.hpp"
#include "uxfb/stats_report.hpp"
#include "uxfb/summarize.hpp"

namespace uxfb::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::EndpointTimeout:
    case ErrorKind::EndpointError:
      return kIo;
    case ErrorKind::FingerprintMismatch:
    case ErrorKind::EmbeddingMismatch:
    case ErrorKind::LengthMismatch:
      return kMismatch;
    case ErrorKind::NoResponses:
      return kNoResponses;
    case ErrorKind::ValidationFailed:
      return kValidation;
    default:
      return kSchema;
  }
}

namespace {

template <typename F>
int guarded(Streams io, F&& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    for (const auto& issue : e.issues())
      io.err << "error: line " << issue.line << ": " << issue.field << ": " << issue.message << '\n';
    return kSchema;
  } catch (const LineError& e) {
    io.err << "error: line " << e.line() << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const Error& e) {
    io.err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    io.err << "error: " << e.what() << '\n';
    return kIo;
  }
}

FileFormat format_of(const fs::path& path, const std::optional<FileFormat>& forced) {
  if (forced) return *forced;
  if (auto f = format_from_path(path)) return *f;
  throw Error(ErrorKind::InvalidArgument, "cannot infer the format of " + path.string() + "; pass --format");
}

TopicTaxonomy taxonomy_of(const cfg::PipelineConfig& config) {
  return config.paths.taxonomy.empty() ? default_taxonomy() : load_taxonomy(config.paths.taxonomy);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

fs::path params_path(const cfg::PipelineConfig& c) {
  return c.paths.params.empty() ? c.paths.reports / "tuned_params.json" : c.paths.params;
}

struct Pool {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::vector<LabelSet> labels;
};

Pool human_pool(const Corpus& corpus) {
  Pool p;
  for (const auto* c : ml::training_pool(corpus)) {
    p.ids.push_back(c->id);
    p.texts.push_back(c->working_text());
    p.labels.push_back(c->labels);
  }
  if (p.ids.empty()) throw Error(ErrorKind::EmptyCorpus, "no human-labeled comments");
  return p;
}

ml::TrainConfig train_config(const cfg::PipelineConfig& c, const gbt::Params& params) {
  ml::TrainConfig t;
  t.shared = params;
  t.tune_thresholds = c.tune_thresholds;
  t.threshold_folds = c.threshold_folds;
  t.seed = c.seed;
  t.jobs = c.jobs;
  return t;
}

gbt::Params chosen_params(const cfg::PipelineConfig& c, Streams io) {
  const auto path = params_path(c);
  if (!fs::exists(path)) return c.train;
  io.err << "using tuned parameters from " << path.string() << '\n';
  try {
    return gbt::params_from_json(read_json_file(path).at("best"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> products_of(const Corpus& corpus) {
  std::set<std::string> s;
  for (const auto& c : corpus.comments()) s.insert(c.product_id);
  return {s.begin(), s.end()};
}

std::vector<Comment> product_comments(const Corpus& corpus, const std::string& product) {
  std::vector<Comment> out;
  for (const auto& c : corpus.comments())
    if (c.product_id == product) out.push_back(c);
  return out;
}

fs::path summary_path(const cfg::PipelineConfig& c, const std::string& product) {
  return c.paths.reports / "summaries" / (product + ".json");
}

stats::ReportConfig stats_config(const cfg::PipelineConfig& c) {
  stats::ReportConfig r;
  r.level = c.stats.level;
  r.bootstrap.replicates = c.stats.replicates;
  r.bootstrap.level = c.stats.level;
  r.bootstrap.seed = c.seed;
  r.bootstrap.jobs = c.jobs;
  r.bootstrap.max_attempts = c.stats.max_attempts;
  return r;
}

const char* survey_slug(SurveyKind k) { return k == SurveyKind::Tutorial ? "tutorial" : "app"; }

}  // namespace

// ---------------------------------------------------------------------------

Corpus load_corpus(const cfg::PipelineConfig& config) {
  if (config.paths.comments.empty()) throw Error(ErrorKind::Config, "paths.comments is not set");
  auto corpus = ingest(config.paths.comments, format_of(config.paths.comments, std::nullopt), taxonomy_of(config));
  if (!config.paths.responses.empty() && fs::exists(config.paths.responses))
    corpus = corpus.with_responses(ingest_responses(config.paths.responses, format_of(config.paths.responses, std::nullopt)));
  return corpus;
}

Corpus load_period_corpus(const cfg::PipelineConfig& config) {
  auto corpus = load_corpus(config);
  if (config.period.empty()) return corpus;
  CommentFilter f;
  f.period = parse_period(config.period);
  return filter(corpus, f);
}

Embedder make_embedder(const cfg::PipelineConfig& config) {
  if (config.embedding_mode == "external")
    return Embedder(load_vectors(config.paths.vectors, config.embedding.dim, config.embedding), config.preprocess);
  return Embedder(EmbeddingModel::subword(config.embedding), config.preprocess);
}

Matrix embed_matrix(const Embedder& embedder, std::span<const std::string> texts, unsigned jobs) {
  const auto vectors = embedder.embed_all(texts, jobs);
  Matrix m(vectors.size(), embedder.dim());
  for (std::size_t i = 0; i < vectors.size(); ++i)
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), m.row(i).begin());
  return m;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const cfg::PipelineConfig& config, const IngestArgs& args, Streams io) {
  return guarded(io, [&] {
    if (!args.corrections.empty()) {
      const auto corpus = load_corpus(config);
      const auto corrections = read_corrections(args.corrections);
      MergeOptions options;
      options.conflicts = args.policy;
      for (const auto& c : corpus.comments()) options.time = std::max(options.time, c.timestamp);
      const auto merged = merge_corrections(corpus, corrections, options);
      const auto added = merged.audit().size() - corpus.audit().size();
      write_comments_file(config.paths.comments, merged.comments());
      const auto log = config.paths.audit_log.empty() ? config.paths.reports / "audit.jsonl" : config.paths.audit_log;
      if (log.has_parent_path()) ensure_dir(log.parent_path());
      append_audit_log(log, std::span(merged.audit()).subspan(corpus.audit().size()));
      io.out << "merged " << corrections.size() << " corrections, " << added << " labels changed\n";
      return static_cast<int>(kOk);
    }
    if (args.comments.empty()) throw Error(ErrorKind::InvalidArgument, "ingest needs a comments file");
    auto corpus = ingest(args.comments, format_of(args.comments, args.format), taxonomy_of(config));
    if (!args.responses.empty())
      corpus = corpus.with_responses(ingest_responses(args.responses, format_of(args.responses, args.format)));
    if (!config.paths.comments.empty()) {
      if (config.paths.comments.has_parent_path()) ensure_dir(config.paths.comments.parent_path());
      write_comments_file(config.paths.comments, corpus.comments());
    }
    if (!args.responses.empty() && !config.paths.responses.empty()) {
      if (config.paths.responses.has_parent_path()) ensure_dir(config.paths.responses.parent_path());
      write_responses_file(config.paths.responses, corpus.responses());
    }
    io.out << "ingested " << corpus.size() << " comments, " << corpus.responses().size() << " responses\n";
    return static_cast<int>(kOk);
  });
}

int cmd_tune(const cfg::PipelineConfig& config, Streams io) {
  return guarded(io, [&] {
    const auto corpus = load_corpus(config);
    const auto pool = human_pool(corpus);
    const auto embedder = make_embedder(config);
    const auto features = embed_matrix(embedder, pool.texts, config.jobs);
    io.err << "grid search: " << config.grid.size() << " cells, " << config.folds << " folds, " << pool.ids.size()
           << " comments\n";
    const auto result =
        ml::grid_search(features, pool.labels, corpus.taxonomy().names(), config.grid, config.folds, config.seed, config.jobs);
    json doc;
    doc["best"] = gbt::params_to_json(result.best);
    doc["best_index"] = result.best_index;
    doc["mean_micro_f1"] = result.cells[result.best_index].mean_micro_f1;
    doc["folds"] = config.folds;
    doc["excluded_labels"] = result.excluded_labels;
    doc["cells"] = json::array();
    for (const auto& c : result.cells) {
      json cell = {{"params", gbt::params_to_json(c.params)}, {"mean_micro_f1", c.mean_micro_f1}, {"fold_micro_f1", c.fold_micro_f1}};
      if (c.failed) cell["failure"] = c.failure;
      doc["cells"].push_back(cell);
    }
    write_text(params_path(config), doc.dump(2) + "\n");
    for (const auto& l : result.excluded_labels) io.err << "warning: label '" << l << "' has < 2 positives; not scored\n";
    io.out << "best cell " << result.best_index << ": mean micro-F1 " << fixed(result.cells[result.best_index].mean_micro_f1, 4)
           << " (eta " << result.best.learning_rate << ", depth " << result.best.max_depth << ", rounds "
           << result.best.n_rounds << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_train(const cfg::PipelineConfig& config, const TrainArgs& args, Streams io) {
  return guarded(io, [&] {
    const auto corpus = load_corpus(config);
    const auto embedder = make_embedder(config);
    const auto params = chosen_params(config, io);
    ml::OneVsRestModel previous;
    previous.metadata.model_version = 0;
    if (!args.fresh && fs::exists(config.paths.models / "manifest.json")) previous = ml::load_bundle(config.paths.models);
    const auto model = ml::retrain(previous, corpus, embedder, train_config(config, params));
    std::error_code ec;
    fs::remove_all(config.paths.models / "heads", ec);
    ml::save_bundle(config.paths.models, model);
    for (const auto& w : model.warnings) io.err << "warning: " << w << '\n';
    io.out << "trained model version " << model.metadata.model_version << " on " << model.metadata.training_size
           << " comments -> " << config.paths.models.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_evaluate(const cfg::PipelineConfig& config, const EvaluateArgs& args, Streams io) {
  return guarded(io, [&] {
    const auto corpus = load_corpus(config);
    const auto pool = human_pool(corpus);
    std::vector<LabelSet> predictions;
    std::string protocol;
    if (!args.predictions.empty()) {
      std::ifstream in(args.predictions);
      if (!in) throw Error(ErrorKind::Io, "cannot open " + args.predictions.string());
      std::map<std::string, LabelSet> by_id;
      std::string line;
      std::size_t line_no = 0, rows = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++rows;
        try {
          const auto j = json::parse(line);
          by_id[j.at("id").get<std::string>()] = j.at("labels").get<LabelSet>();
        } catch (const json::exception& e) {
          throw LineError(ErrorKind::Parse, line_no, e.what());
        }
      }
      if (rows != pool.ids.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(rows) + " predictions for " +
                                                   std::to_string(pool.ids.size()) + " human-labeled comments");
      for (const auto& id : pool.ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::LengthMismatch, "no prediction for comment " + id);
        predictions.push_back(it->second);
      }
      protocol = "supplied predictions (" + args.predictions.filename().string() + ")";
    } else {
      const auto embedder = make_embedder(config);
      const auto features = embed_matrix(embedder, pool.texts, config.jobs);
      const auto folds = ml::stratified_kfold(pool.labels, config.folds, config.seed);
      const auto params = chosen_params(config, io);
      predictions.resize(pool.ids.size());
      for (int f = 0; f < folds.k; ++f) {
        const auto train_rows = folds.training_rows(f);
        std::vector<LabelSet> train_labels;
        for (auto r : train_rows) train_labels.push_back(pool.labels[r]);
        const auto model = ml::train_ovr(features.select_rows(train_rows), train_labels, corpus.taxonomy(),
                                         embedder.fingerprint(), train_config(config, params));
        for (auto r : folds.validation_rows(f))
          predictions[r] = ml::predict_labels(model, features.row(r), embedder.fingerprint()).labels;
      }
      protocol = std::to_string(config.folds) + "-fold cross-validation on " + std::to_string(pool.ids.size()) +
                 " human-labeled comments";
    }
    const auto report = ml::evaluate(predictions, pool.labels, corpus.taxonomy(), protocol);
    const auto csv = ml::to_csv(report);
    write_text(config.paths.reports / "evaluation.csv", csv);
    write_text(config.paths.reports / "evaluation.md", ml::to_markdown(report));
    io.out << csv;
    return static_cast<int>(kOk);
  });
}

int cmd_predict(const cfg::PipelineConfig& config, Streams io) {
  return guarded(io, [&] {
    const auto corpus = load_corpus(config);
    const auto embedder = make_embedder(config);
    const auto model = ml::load_bundle(config.paths.models, embedder.fingerprint());
    std::vector<std::size_t> targets;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < corpus.comments().size(); ++i) {
      const auto& c = corpus.comments()[i];
      if (c.label_source == LabelSource::Human) continue;
      targets.push_back(i);
      texts.push_back(c.working_text());
    }
    const auto features = embed_matrix(embedder, texts, config.jobs);
    auto comments = corpus.comments();
    std::size_t changed = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      auto& c = comments[targets[k]];
      auto labels = ml::predict_labels(model, features.row(k), embedder.fingerprint()).labels;
      if (labels != c.labels || c.label_source != LabelSource::Model) ++changed;
      c.labels = std::move(labels);
      c.label_source = LabelSource::Model;
    }
    if (changed > 0) write_comments_file(config.paths.comments, comments);
    io.out << "predicted " << targets.size() << " comments, " << changed << " changed\n";
    return static_cast<int>(kOk);
  });
}

int cmd_stats(const cfg::PipelineConfig& config, const StatsArgs& args, Streams io) {
  return guarded(io, [&] {
    std::vector<SurveyKind> kinds;
    if (args.survey == "tutorial" || args.survey == "all") kinds.push_back(SurveyKind::Tutorial);
    if (args.survey == "app" || args.survey == "all") kinds.push_back(SurveyKind::AppUsability);
    if (kinds.empty()) throw Error(ErrorKind::InvalidArgument, "survey must be tutorial, app or all");
    const auto corpus = load_period_corpus(config);
    int produced = 0;
    for (auto kind : kinds) {
      stats::SurveyReport report;
      try {
        report = stats::analyze_survey(corpus, kind, stats_config(config));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoResponses || args.survey != "all") throw;
        io.err << "notice: " << e.what() << '\n';
        continue;
      }
      const std::string slug = survey_slug(kind);
      write_text(config.paths.reports / ("stats_" + slug + ".json"), stats::to_json(report).dump(2) + "\n");
      write_text(config.paths.reports / ("stats_" + slug + ".md"), stats::to_markdown(report));
      write_text(config.paths.reports / ("curves_" + slug + ".csv"), stats::curves_csv(report));
      for (const auto& w : report.warnings) io.err << "warning: " << w << '\n';
      io.out << stats::to_markdown(report) << '\n';
      ++produced;
    }
    if (produced == 0) throw Error(ErrorKind::NoResponses, "no survey responses in the selected period");
    return static_cast<int>(kOk);
  });
}

int cmd_summarize(const cfg::PipelineConfig& config, const SummarizeArgs& args, Streams io) {
  return guarded(io, [&] {
    const auto corpus = load_period_corpus(config);
    const auto embedder = make_embedder(config);
    auto products = products_of(corpus);
    if (!args.product.empty()) {
      if (std::find(products.begin(), products.end(), args.product) == products.end())
        throw Error(ErrorKind::InvalidArgument, "no comments for product '" + args.product + "'");
      products = {args.product};
    }
    int rejected = 0;
    for (const auto& product : products) {
      const auto comments = product_comments(corpus, product);
      const auto elig = summ::eligible(comments, config.summary);
      json doc = {{"product", product}, {"period", config.period}, {"total_comments", comments.size()},
                  {"eligible", elig.eligible}};
      if (!elig.eligible) {
        doc["reason"] = elig.reason;
        write_text(summary_path(config, product), doc.dump(2) + "\n");
        io.out << product << ": skipped (" << elig.reason << ")\n";
        continue;
      }
      json cats = json::array();
      for (const auto& c : elig.categories)
        cats.push_back({{"name", c.name}, {"comments", c.comments}, {"override", c.override_included}});
      doc["categories"] = cats;
      doc["category_threshold"] = elig.category_threshold;

      const auto prompt = summ::build_prompt(comments, elig, config.summary);
      write_text(config.paths.reports / "summaries" / (product + ".prompt.txt"), prompt.render());
      const auto draft = summ::generate(comments, prompt, embedder, config.summary);
      const auto first = summ::validate(draft, comments, config.summary);
      const auto repaired = summ::repair(draft, first, comments, config.summary, args.expand);

      json notices = json::array();
      std::vector<summ::Snippet> snippets;
      auto snippet_config = config.summary;
      try {
        snippets = summ::select_snippets(repaired.draft, comments, snippet_config);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientSupported) throw;
        std::set<std::string> cited;
        for (const auto& cat : repaired.draft.categories)
          for (const auto& a : cat.attributes)
            for (const auto& cit : a.citations) cited.insert(cit.comment_id);
        snippet_config.snippet_count = static_cast<int>(cited.size());
        notices.push_back(std::string(e.what()) + "; showing " + std::to_string(cited.size()) + " snippets");
        snippets = summ::select_snippets(repaired.draft, comments, snippet_config);
      }
      const auto final_report = summ::validate(repaired.draft, comments, config.summary, snippets);
      const bool clean = final_report.publishable(config.summary.balance_tolerance);

      doc["draft"] = summ::to_json(repaired.draft);
      doc["snippets"] = json::array();
      for (const auto& s : snippets)
        doc["snippets"].push_back({{"id", s.comment_id}, {"text", s.text}, {"sentiment", s.sentiment}, {"cited_by", s.cited_by}});
      doc["changes"] = repaired.changes;
      doc["notices"] = notices;
      doc["clean"] = clean;
      if (final_report.balance) doc["balance_deviation"] = final_report.balance->deviation;
      write_text(summary_path(config, product), doc.dump(2) + "\n");
      io.out << product << ": " << repaired.draft.categories.size() << " categories, " << snippets.size()
             << " snippets, " << (clean ? "clean" : "NOT clean") << '\n';
      if (!clean) ++rejected;
    }
    if (rejected > 0) {
      io.err << "error: " << rejected << " summaries failed validation\n";
      return static_cast<int>(kValidation);
    }
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------

namespace {

struct SummaryCheck {
  bool present = false;
  bool stale = false;  // generated for another period
  bool eligible = false;
  bool clean = false;
  std::string reason;
  summ::SummaryDraft draft;
  std::vector<summ::Snippet> snippets;
};

SummaryCheck check_summary(const cfg::PipelineConfig& config, const std::string& product,
                           const std::vector<Comment>& comments) {
  SummaryCheck out;
  const auto path = summary_path(config, product);
  if (!fs::exists(path)) return out;
  out.present = true;
  const auto doc = read_json_file(path);
  try {
    const auto period = doc.value("period", std::string());
    if (period != config.period) {
      out.stale = true;
      out.reason = "generated for " + (period.empty() ? std::string("all data") : "period " + period);
      return out;
    }
    out.eligible = doc.at("eligible").get<bool>();
    if (!out.eligible) {
      out.reason = doc.value("reason", std::string("not eligible"));
      return out;
    }
    out.draft = summ::draft_from_json(doc.at("draft"));
    for (const auto& s : doc.at("snippets"))
      out.snippets.push_back({s.at("id").get<std::string>(), s.at("text").get<std::string>(),
                              s.at("sentiment").get<std::string>(), s.at("cited_by").get<std::size_t>()});
  } catch (const json::exception& e) {
    out.reason = std::string("unreadable summary: ") + e.what();
    return out;
  } catch (const Error& e) {
    out.reason = std::string("unreadable summary: ") + e.what();
    return out;
  }
  // Snippets must themselves be verbatim extracts of the comments they name.
  summ::SummaryDraft snippet_check;
  snippet_check.categories.push_back({"snippets", {}});
  for (const auto& s : out.snippets)
    snippet_check.categories.back().attributes.push_back({s.text, {{s.comment_id, s.text}}});
  const auto report = summ::validate(out.draft, comments, config.summary, out.snippets);
  const auto snippet_report = summ::validate(snippet_check, comments, config.summary);
  out.clean = report.publishable(config.summary.balance_tolerance) &&
              snippet_report.publishable(config.summary.balance_tolerance);
  if (!out.clean) {
    std::vector<std::string> problems;
    for (const auto& a : report.attributes)
      if (a.status != summ::Status::Supported)
        problems.push_back(a.category + " #" + std::to_string(a.index) + " " + std::string(summ::to_string(a.status)));
    for (const auto& a : snippet_report.attributes)
      if (a.status != summ::Status::Supported) problems.push_back("snippet " + std::string(summ::to_string(a.status)));
    if (report.balance && report.balance->deviation > config.summary.balance_tolerance)
      problems.push_back("sentiment balance off by " + std::to_string(report.balance->deviation));
    for (const auto& p : problems) out.reason += (out.reason.empty() ? "" : "; ") + p;
  }
  return out;
}

std::string share_delta(std::int64_t now, std::optional<std::int64_t> before) {
  if (!before) return "n/a";
  const auto d = now - *before;
  return std::string(d > 0 ? "+" : (d < 0 ? "-" : "")) + format_hundredths(d < 0 ? -d : d) + " pp";
}

}  // namespace

int cmd_report(const cfg::PipelineConfig& config, Streams io) {
  return guarded(io, [&] {
    const auto all = load_corpus(config);
    const auto corpus = load_period_corpus(config);
    std::optional<Corpus> previous;
    std::optional<Period> prev_period;
    if (!config.period.empty()) {
      prev_period = previous_period(*parse_period(config.period));
      CommentFilter f;
      f.period = prev_period;
      previous = filter(all, f);
    }

    std::ostringstream md;
    md << "# User feedback report\n\n";
    md << "Period: " << (config.period.empty() ? std::string("all data") : config.period) << "\n\n";
    if (fs::exists(config.paths.models / "manifest.json")) {
      const auto model = ml::load_bundle(config.paths.models);
      md << "Classifier: model version " << model.metadata.model_version << ", trained on "
         << model.metadata.training_size << " human-labeled comments (latest " << model.metadata.trained_at
         << "), taxonomy version " << model.taxonomy_version << ".\n\n";
    } else {
      md << "Classifier: no model bundle found.\n\n";
    }

    md << "# Survey statistics\n\n";
    for (auto kind : {SurveyKind::Tutorial, SurveyKind::AppUsability}) {
      try {
        md << stats::to_markdown(stats::analyze_survey(corpus, kind, stats_config(config))) << '\n';
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoResponses) throw;
        md << "No " << to_string(kind) << " survey responses in this period.\n\n";
      }
    }

    int refused = 0;
    md << "# Products\n";
    for (const auto& product : products_of(corpus)) {
      const auto comments = product_comments(corpus, product);
      md << "\n## " << product << "\n\n" << comments.size() << " comments.\n\n";

      CommentFilter pf;
      pf.product = product;
      const auto current = filter(corpus, pf);
      std::optional<std::vector<LabelShare>> before;
      if (previous) {
        const auto prev = filter(*previous, pf);
        if (!prev.empty()) before = label_shares(prev);
      }
      md << "| Label | Comments | Share |" << (prev_period ? " Change vs " + prev_period->name + " |" : std::string()) << '\n';
      md << "|---|---:|---:|" << (prev_period ? "---:|" : "") << '\n';
      const auto shares = label_shares(current);
      for (std::size_t i = 0; i < shares.size(); ++i) {
        md << "| " << shares[i].label << " | " << shares[i].count << " | " << shares[i].percent_text() << " |";
        if (prev_period)
          md << ' '
             << share_delta(shares[i].percent_hundredths,
                            before ? std::optional<std::int64_t>((*before)[i].percent_hundredths) : std::nullopt)
             << " |";
        md << '\n';
      }
      md << '\n';

      const auto check = check_summary(config, product, comments);
      if (!check.present) {
        md << "No summary generated.\n";
      } else if (check.stale) {
        md << "No summary for this period (the stored summary was " << check.reason << ").\n";
        io.err << "notice: " << product << ": stored summary " << check.reason << "; run summarize with this period\n";
      } else if (!check.eligible) {
        md << "Summary skipped: " << check.reason << ".\n";
      } else if (!check.clean) {
        md << "Summary withheld: validation failed (" << check.reason << ").\n";
        io.err << "error: " << product << ": summary refused: " << check.reason << '\n';
        ++refused;
      } else {
        md << "### Summary\n\n" << summ::render_markdown(check.draft, check.snippets, comments.size(), config.summary);
      }
    }
    write_text(config.paths.reports / "report.md", md.str());
    io.out << "wrote " << (config.paths.reports / "report.md").string() << '\n';
    return static_cast<int>(refused > 0 ? kValidation : kOk);
  });
}

}  // namespace uxfb::pipeline
