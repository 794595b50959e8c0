// Writes the bundled synthetic corpus: survey comments and responses whose
// sentiment x metric tables replay the published counts.

#include <iostream>

#include "CLI11.hpp"
#include "uxfb/corpus.hpp"
#include "uxfb/error.hpp"
#include "uxfb/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"uxfb-synth: generate a synthetic survey corpus"};
  std::string out_dir = "data";
  uxfb::synth::SurveyOptions options;
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("--seed", options.seed, "generator seed");
  app.add_option("--human-fraction", options.human_fraction, "share of comments carrying human labels")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--unlinked", options.tutorial_without_comment, "responses without a comment, per survey");
  CLI11_PARSE(app, argc, argv);
  options.app_without_comment = options.tutorial_without_comment;

  try {
    const auto data = uxfb::synth::survey_corpus(options);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    uxfb::write_comments_file(dir / "comments.jsonl", data.comments);
    uxfb::write_responses_file(dir / "responses.jsonl", data.responses);
    std::cout << data.comments.size() << " comments, " << data.responses.size() << " responses -> " << out_dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
